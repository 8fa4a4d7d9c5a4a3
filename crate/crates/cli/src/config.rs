//! Experiment configuration: a fully explicit, serializable description of one run.

use std::path::Path;

use semiloc_core::lattice::{Boundary, LatticeSpec};
use semiloc_core::transport::Integrator;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

/// A resolved experiment. Every field is explicit; presets only fill them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of the output files.
    pub name: String,
    pub scale: Scale,
    pub seed: u64,
    pub realizations: u64,
    /// Also write per-realization records.
    #[serde(default)]
    pub raw: bool,
    /// Worker threads; all available cores when absent. Does not affect results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output directory; the `--out` flag and `SEMILOC_OUT` take part in resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub experiment: Experiment,
}

/// Lattice geometry and the parameters shared by every realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct System {
    pub dimension: usize,
    pub boundary: Boundary,
    pub hopping: f64,
    pub detuning: f64,
}

impl System {
    pub fn lattice(&self, length: usize) -> Result<LatticeSpec, CliError> {
        Ok(LatticeSpec::new(self.dimension, length, self.boundary)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// The lattice centre (site `N/2` of a chain).
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// Log-averaged profile of the eigenstate localized on the origin.
    Tail(TailParams),
    /// Disorder-averaged `Π_ii` of the origin versus `W`.
    ReturnProbability(ReturnProbabilityParams),
    /// Energy-binned dark-state IPR versus `W`.
    IprMap(IprMapParams),
    /// Binned IPR at fixed `(W, ε)` versus `N`.
    IprScaling(IprScalingParams),
    /// Unfolded level spacings and their distances to the reference laws.
    Spacing(SpacingParams),
    /// Dark-state deviation from bare-level midpoints versus `W`.
    Deviation(DeviationParams),
    /// Window-averaged boundary-driven current versus `N`.
    Transport(TransportParams),
    /// Mean squared displacement from the chain centre.
    Diffusion(DiffusionParams),
    /// Fermi-golden-rule escape rates against the numerical escape slope.
    FgrCheck(FgrCheckParams),
    /// Finite-part integral against the closed-form averaged tail.
    TailCheck(TailCheckParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub system: System,
    pub length: usize,
    pub disorder: f64,
    pub couplings: Vec<f64>,
    pub origin: Origin,
    /// Distances at or beyond this count as the tail.
    pub tail_from: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnProbabilityParams {
    pub system: System,
    pub lengths: Vec<usize>,
    pub disorders: Vec<f64>,
    pub couplings: Vec<f64>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IprMapParams {
    pub system: System,
    pub length: usize,
    pub disorders: Vec<f64>,
    pub couplings: Vec<f64>,
    pub bin_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingPoint {
    pub disorder: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IprScalingParams {
    pub system: System,
    pub lengths: Vec<usize>,
    pub coupling: f64,
    pub points: Vec<ScalingPoint>,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingRegime {
    pub label: String,
    pub disorder: f64,
    /// Half-open `ε` window `[lo, hi)`.
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingParams {
    pub system: System,
    pub length: usize,
    pub coupling: f64,
    pub regimes: Vec<SpacingRegime>,
    pub histogram_bins: usize,
    pub histogram_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationParams {
    pub system: System,
    pub length: usize,
    pub disorders: Vec<f64>,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    pub system: System,
    pub lengths: Vec<usize>,
    pub disorder: f64,
    pub couplings: Vec<f64>,
    pub gamma: f64,
    pub window: (f64, f64),
    pub sample_step: f64,
    pub integrator: Integrator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionParams {
    pub system: System,
    pub lengths: Vec<usize>,
    pub disorder: f64,
    pub couplings: Vec<f64>,
    pub origin: Origin,
    pub t_end: f64,
    pub time_points: usize,
    /// The plateau is the mean of `σ̄²` over `t ≥ plateau_from·t_end`.
    pub plateau_from: f64,
    /// The fit window ends where `σ̄²` first reaches this fraction of the plateau.
    pub plateau_fraction: f64,
    /// The fit window starts at its end time divided by this ratio.
    pub window_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FgrCheckParams {
    pub n: usize,
    pub disorder: f64,
    pub coupling: f64,
    pub detuning: f64,
    /// Sites with `|w_i + δ|/W` inside this interval are probed.
    pub site_band: (f64, f64),
    pub max_sites: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub time_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailCase {
    pub coupling: f64,
    pub disorder: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailCheckParams {
    pub cases: Vec<TailCase>,
    /// Excision radii in units of `W`.
    pub epsilons: Vec<f64>,
    /// Reference scale of the logarithm in units of `W`.
    pub log_scale: f64,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    Ok(())
}

fn nonnegative(field: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        Some(x) => Err(invalid(field, format!("must be finite and ≥ 0, got {x}"))),
        None => Ok(()),
    }
}

fn positive(field: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(invalid(field, format!("must be finite and > 0, got {x}"))),
        None => Ok(()),
    }
}

fn system_ok(field: &str, s: &System, lengths: &[usize]) -> Result<(), CliError> {
    if !(s.hopping >= 0.0 && s.hopping.is_finite()) {
        return Err(invalid(&format!("{field}.hopping"), format!("must be ≥ 0, got {}", s.hopping)));
    }
    if !s.detuning.is_finite() {
        return Err(invalid(&format!("{field}.detuning"), "must be finite"));
    }
    for &l in lengths {
        s.lattice(l)
            .map_err(|e| invalid(&format!("{field}.dimension/length"), e))?;
    }
    Ok(())
}

impl ExperimentConfig {
    /// Field-level validation of everything the run will use.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a nonempty file stem"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be positive"));
        }
        let e = "experiment";
        match &self.experiment {
            Experiment::Tail(p) => {
                system_ok(&format!("{e}.system"), &p.system, &[p.length])?;
                positive(&format!("{e}.disorder"), &[p.disorder])?;
                nonempty(&format!("{e}.couplings"), &p.couplings)?;
                nonnegative(&format!("{e}.couplings"), &p.couplings)?;
                nonnegative(&format!("{e}.tail_from"), &[p.tail_from])?;
            }
            Experiment::ReturnProbability(p) => {
                nonempty(&format!("{e}.lengths"), &p.lengths)?;
                system_ok(&format!("{e}.system"), &p.system, &p.lengths)?;
                nonempty(&format!("{e}.disorders"), &p.disorders)?;
                nonnegative(&format!("{e}.disorders"), &p.disorders)?;
                nonempty(&format!("{e}.couplings"), &p.couplings)?;
                nonnegative(&format!("{e}.couplings"), &p.couplings)?;
            }
            Experiment::IprMap(p) => {
                system_ok(&format!("{e}.system"), &p.system, &[p.length])?;
                nonempty(&format!("{e}.disorders"), &p.disorders)?;
                positive(&format!("{e}.disorders"), &p.disorders)?;
                nonempty(&format!("{e}.couplings"), &p.couplings)?;
                nonnegative(&format!("{e}.couplings"), &p.couplings)?;
                positive(&format!("{e}.bin_width"), &[p.bin_width])?;
            }
            Experiment::IprScaling(p) => {
                nonempty(&format!("{e}.lengths"), &p.lengths)?;
                system_ok(&format!("{e}.system"), &p.system, &p.lengths)?;
                nonnegative(&format!("{e}.coupling"), &[p.coupling])?;
                nonempty(&format!("{e}.points"), &p.points)?;
                positive(
                    &format!("{e}.points.disorder"),
                    &p.points.iter().map(|q| q.disorder).collect::<Vec<_>>(),
                )?;
                positive(&format!("{e}.bin_width"), &[p.bin_width])?;
            }
            Experiment::Spacing(p) => {
                system_ok(&format!("{e}.system"), &p.system, &[p.length])?;
                nonnegative(&format!("{e}.coupling"), &[p.coupling])?;
                nonempty(&format!("{e}.regimes"), &p.regimes)?;
                for (k, r) in p.regimes.iter().enumerate() {
                    positive(&format!("{e}.regimes[{k}].disorder"), &[r.disorder])?;
                    if !(r.window.0 < r.window.1) {
                        return Err(invalid(&format!("{e}.regimes[{k}].window"), "needs lo < hi"));
                    }
                }
                if p.histogram_bins == 0 {
                    return Err(invalid(&format!("{e}.histogram_bins"), "must be positive"));
                }
                positive(&format!("{e}.histogram_max"), &[p.histogram_max])?;
            }
            Experiment::Deviation(p) => {
                system_ok(&format!("{e}.system"), &p.system, &[p.length])?;
                nonempty(&format!("{e}.disorders"), &p.disorders)?;
                positive(&format!("{e}.disorders"), &p.disorders)?;
                nonnegative(&format!("{e}.coupling"), &[p.coupling])?;
            }
            Experiment::Transport(p) => {
                nonempty(&format!("{e}.lengths"), &p.lengths)?;
                system_ok(&format!("{e}.system"), &p.system, &p.lengths)?;
                if p.system.dimension != 1 {
                    return Err(invalid(&format!("{e}.system.dimension"), "transport runs on chains"));
                }
                nonnegative(&format!("{e}.disorder"), &[p.disorder])?;
                nonempty(&format!("{e}.couplings"), &p.couplings)?;
                nonnegative(&format!("{e}.couplings"), &p.couplings)?;
                positive(&format!("{e}.gamma"), &[p.gamma])?;
                positive(&format!("{e}.sample_step"), &[p.sample_step])?;
                if !(p.window.0 >= 0.0 && p.window.0 < p.window.1) {
                    return Err(invalid(&format!("{e}.window"), "needs 0 ≤ t1 < t2"));
                }
            }
            Experiment::Diffusion(p) => {
                nonempty(&format!("{e}.lengths"), &p.lengths)?;
                system_ok(&format!("{e}.system"), &p.system, &p.lengths)?;
                positive(&format!("{e}.disorder"), &[p.disorder])?;
                nonempty(&format!("{e}.couplings"), &p.couplings)?;
                nonnegative(&format!("{e}.couplings"), &p.couplings)?;
                positive(&format!("{e}.t_end"), &[p.t_end])?;
                if p.time_points < 3 {
                    return Err(invalid(&format!("{e}.time_points"), "needs at least 3"));
                }
                if !(p.plateau_from > 0.0 && p.plateau_from < 1.0) {
                    return Err(invalid(&format!("{e}.plateau_from"), "must lie in (0, 1)"));
                }
                if !(p.plateau_fraction > 0.0 && p.plateau_fraction < 1.0) {
                    return Err(invalid(&format!("{e}.plateau_fraction"), "must lie in (0, 1)"));
                }
                if !(p.window_ratio > 1.0) {
                    return Err(invalid(&format!("{e}.window_ratio"), "must exceed 1"));
                }
            }
            Experiment::FgrCheck(p) => {
                if p.n < 2 {
                    return Err(invalid(&format!("{e}.n"), "needs at least 2 emitters"));
                }
                positive(&format!("{e}.disorder"), &[p.disorder])?;
                nonnegative(&format!("{e}.coupling"), &[p.coupling])?;
                if !(p.site_band.0 >= 0.0 && p.site_band.0 < p.site_band.1) {
                    return Err(invalid(&format!("{e}.site_band"), "needs 0 ≤ lo < hi"));
                }
                if p.max_sites == 0 {
                    return Err(invalid(&format!("{e}.max_sites"), "must be positive"));
                }
                if !(p.t_start > 0.0 && p.t_start < p.t_end) || p.time_points < 3 {
                    return Err(invalid(&format!("{e}.t_start/t_end/time_points"), "need 0 < t_start < t_end and ≥ 3 points"));
                }
            }
            Experiment::TailCheck(p) => {
                nonempty(&format!("{e}.cases"), &p.cases)?;
                for (k, c) in p.cases.iter().enumerate() {
                    positive(&format!("{e}.cases[{k}].disorder"), &[c.disorder])?;
                    nonnegative(&format!("{e}.cases[{k}].coupling"), &[c.coupling])?;
                    if c.n == 0 {
                        return Err(invalid(&format!("{e}.cases[{k}].n"), "must be positive"));
                    }
                }
                if !(3..=4).contains(&p.epsilons.len()) {
                    return Err(invalid(&format!("{e}.epsilons"), "needs three or four radii"));
                }
                positive(&format!("{e}.log_scale"), &[p.log_scale])?;
            }
        }
        Ok(())
    }

    /// Replace the coupling sweep by a single value.
    pub fn override_coupling(&mut self, gc: f64) -> Result<(), CliError> {
        match &mut self.experiment {
            Experiment::Tail(p) => p.couplings = vec![gc],
            Experiment::ReturnProbability(p) => p.couplings = vec![gc],
            Experiment::IprMap(p) => p.couplings = vec![gc],
            Experiment::IprScaling(p) => p.coupling = gc,
            Experiment::Spacing(p) => p.coupling = gc,
            Experiment::Deviation(p) => p.coupling = gc,
            Experiment::Transport(p) => p.couplings = vec![gc],
            Experiment::Diffusion(p) => p.couplings = vec![gc],
            Experiment::FgrCheck(p) => p.coupling = gc,
            Experiment::TailCheck(p) => p.cases.iter_mut().for_each(|c| c.coupling = gc),
        }
        Ok(())
    }

    /// The configuration as echoed into CSV headers: run-local settings removed.
    pub fn echo(&self) -> ExperimentConfig {
        ExperimentConfig {
            threads: None,
            output_dir: None,
            ..self.clone()
        }
    }
}

/// Reads a config file, or the metadata sidecar of an earlier run.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let inner = match value.get("config") {
        Some(c) if value.get("schema_version").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
