//! Experiment runners. Each turns a resolved [`ExperimentConfig`] into tables
//! and a JSON summary; nothing here touches the file system.

use std::collections::BTreeMap;

use semiloc_core::dynamics::{evolve, linear_grid, msd, return_probability};
use semiloc_core::ensemble::{bin_by_energy, bin_index, run_ensemble, EnsembleStats, RealizationFailure};
use semiloc_core::lattice::{Boundary, LatticeSpec};
use semiloc_core::levelstats::{best_match, dark_state_deviation, harvest_spacings, spacing_histogram};
use semiloc_core::localization::{
    dark_state_records, fit_localization_length, localized_state_weights, profile_log_mean,
    InfiniteTimeAverage,
};
use semiloc_core::model::{build_hamiltonian, sample_disorder, DisorderRealization, ModelParams};
use semiloc_core::numeric::linear_fit;
use semiloc_core::perturbation::{
    fermi_golden_rate, finite_part_tail_numeric, mean_tail, mean_tail_with_reference, msd_lower_bound,
};
use semiloc_core::spectral::{diagonalize_arrowhead, diagonalize_dense, SpectralDecomposition};
use semiloc_core::transport::{evolve_open, window_average, OpenSystemOptions, WindowAverage};
use serde_json::json;

use crate::config::*;
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const FIG1C_COLUMNS: &[&str] = &["distance", "log_mean_amp2", "analytic_tail", "g_c_over_J", "samples"];
pub const FIG1C_FIT_COLUMNS: &[&str] = &[
    "g_c_over_J",
    "tail_level",
    "tail_max_over_min",
    "analytic_tail",
    "tail_over_analytic",
    "xi",
    "xi_r_squared",
    "xi_points",
];
pub const RETURN_COLUMNS: &[&str] = &["W_over_J", "g_c_over_J", "pi_mean", "pi_sem", "realizations", "N"];
pub const IPR_MAP_COLUMNS: &[&str] = &[
    "g_c_over_J",
    "W_over_J",
    "eps_lo",
    "eps_hi",
    "ipr_mean",
    "ipr_sem",
    "realizations",
    "states",
];
pub const IPR_SCALING_COLUMNS: &[&str] = &["W_over_J", "epsilon", "eps_lo", "N", "ipr_mean", "ipr_sem", "realizations"];
pub const IPR_SCALING_FIT_COLUMNS: &[&str] = &["W_over_J", "epsilon", "slope", "slope_stderr", "intercept", "r_squared"];
pub const SPACING_HIST_COLUMNS: &[&str] = &["regime", "W_over_J", "s", "density"];
pub const SPACING_KS_COLUMNS: &[&str] = &[
    "regime",
    "W_over_J",
    "eps_lo",
    "eps_hi",
    "ks_wigner_dyson",
    "ks_poisson",
    "ks_semi_poisson",
    "best",
    "spacings",
    "realizations",
];
pub const DEVIATION_COLUMNS: &[&str] = &[
    "W_over_J",
    "g_c_over_J",
    "delta_abs_mean",
    "delta_abs_sem",
    "delta_rel_mean",
    "delta_rel_sem",
    "delta_mean",
    "states",
    "realizations",
    "N",
];
pub const TRANSPORT_COLUMNS: &[&str] = &[
    "N",
    "I_mean",
    "I_min",
    "I_max",
    "window_t1",
    "window_t2",
    "g_c_over_J",
    "I_sem",
    "I_first_half_mean",
    "I_second_half_mean",
    "realizations",
];
pub const TRANSPORT_RAW_COLUMNS: &[&str] = &["g_c_over_J", "N", "realization", "I_avg", "I_first_half", "I_second_half"];
pub const DIFFUSION_COLUMNS: &[&str] = &[
    "g_c_over_J",
    "N",
    "t",
    "msd_mean",
    "msd_sem",
    "msd_over_N",
    "msd_over_N_sem",
    "bound_over_N",
    "realizations",
];
pub const DIFFUSION_FIT_COLUMNS: &[&str] = &[
    "g_c_over_J",
    "N",
    "t_a",
    "t_b",
    "slope",
    "slope_over_N",
    "intercept",
    "r_squared",
    "plateau",
    "points",
];
pub const FGR_COLUMNS: &[&str] = &["realization", "site", "w_i", "gamma_fgr", "slope", "ratio"];
pub const TAIL_CHECK_COLUMNS: &[&str] = &[
    "g_c_over_J",
    "W_over_J",
    "N",
    "closed_form",
    "finite_part",
    "rel_error",
    "coeff_inverse",
    "coeff_log",
];

/// Tables, summary and failures of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    pub failures: Vec<RealizationFailure>,
}

impl RunOutput {
    pub fn table(&self, suffix: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.suffix == suffix)
    }
}

/// Column layouts of every table an experiment kind writes, keyed by file suffix.
pub fn schema(experiment: &Experiment) -> Vec<(&'static str, &'static [&'static str])> {
    match experiment {
        Experiment::Tail(_) => vec![("", FIG1C_COLUMNS), ("_fit", FIG1C_FIT_COLUMNS)],
        Experiment::ReturnProbability(_) => vec![("", RETURN_COLUMNS)],
        Experiment::IprMap(_) => vec![("", IPR_MAP_COLUMNS)],
        Experiment::IprScaling(_) => vec![("", IPR_SCALING_COLUMNS), ("_fit", IPR_SCALING_FIT_COLUMNS)],
        Experiment::Spacing(_) => vec![("", SPACING_HIST_COLUMNS), ("_ks", SPACING_KS_COLUMNS)],
        Experiment::Deviation(_) => vec![("", DEVIATION_COLUMNS)],
        Experiment::Transport(_) => vec![("", TRANSPORT_COLUMNS), ("_raw", TRANSPORT_RAW_COLUMNS)],
        Experiment::Diffusion(_) => vec![("", DIFFUSION_COLUMNS), ("_fit", DIFFUSION_FIT_COLUMNS)],
        Experiment::FgrCheck(_) => vec![("", FGR_COLUMNS)],
        Experiment::TailCheck(_) => vec![("", TAIL_CHECK_COLUMNS)],
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let ctx = Ctx {
        seed: config.seed,
        realizations: config.realizations,
        threads: config.threads,
        raw: config.raw,
        failures: Vec::new(),
    };
    match &config.experiment {
        Experiment::Tail(p) => run_tail(ctx, p),
        Experiment::ReturnProbability(p) => run_return_probability(ctx, p),
        Experiment::IprMap(p) => run_ipr_map(ctx, p),
        Experiment::IprScaling(p) => run_ipr_scaling(ctx, p),
        Experiment::Spacing(p) => run_spacing(ctx, p),
        Experiment::Deviation(p) => run_deviation(ctx, p),
        Experiment::Transport(p) => run_transport(ctx, p),
        Experiment::Diffusion(p) => run_diffusion(ctx, p),
        Experiment::FgrCheck(p) => run_fgr_check(ctx, p),
        Experiment::TailCheck(p) => run_tail_check(p),
    }
}

struct Ctx {
    seed: u64,
    realizations: u64,
    threads: Option<usize>,
    raw: bool,
    failures: Vec<RealizationFailure>,
}

impl Ctx {
    /// Runs `job` over all realizations; failures are tagged with `label` and kept.
    fn ensemble<R, F>(&mut self, label: &str, job: F) -> Result<Vec<R>, CliError>
    where
        R: Send,
        F: Fn(u64, u64) -> semiloc_core::Result<R> + Sync,
    {
        let run = run_ensemble(self.seed, self.realizations, self.threads, job)?;
        for mut f in run.failures {
            f.message = format!("{label}: {}", f.message);
            self.failures.push(f);
        }
        if run.records.is_empty() {
            return Err(CliError::Computation(format!(
                "{label}: every realization failed (seed {})",
                self.seed
            )));
        }
        Ok(run.records.into_iter().map(|(_, r)| r).collect())
    }

    fn finish(self, tables: Vec<Table>, summary: serde_json::Value) -> Result<RunOutput, CliError> {
        Ok(RunOutput {
            tables,
            summary,
            failures: self.failures,
        })
    }
}

fn model(system: &System, n: usize, disorder: f64, coupling: f64) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(n, disorder, system.hopping, coupling)?.with_detuning(system.detuning))
}

/// Arrowhead path at `J = 0`, dense otherwise.
fn diagonalize(
    lattice: &LatticeSpec,
    params: &ModelParams,
    disorder: &DisorderRealization,
) -> semiloc_core::Result<SpectralDecomposition> {
    if params.hopping == 0.0 {
        diagonalize_arrowhead(disorder, params)
    } else {
        diagonalize_dense(&build_hamiltonian(lattice, params, disorder)?)
    }
}

fn origin_site(lattice: &LatticeSpec, origin: Origin) -> usize {
    match origin {
        Origin::Center => lattice.center(),
    }
}

fn stats(label: &str, v: &[f64]) -> Result<EnsembleStats, CliError> {
    EnsembleStats::from_samples(v).map_err(|e| CliError::Computation(format!("{label}: {e}")))
}

fn run_tail(mut ctx: Ctx, p: &TailParams) -> Result<RunOutput, CliError> {
    let lattice = p.system.lattice(p.length)?;
    let n = lattice.num_sites();
    let origin = origin_site(&lattice, p.origin);
    let mut table = Table::new("", FIG1C_COLUMNS);
    let mut fit_table = Table::new("_fit", FIG1C_FIT_COLUMNS);
    let mut summary = Vec::new();
    for &gc in &p.couplings {
        let params = model(&p.system, n, p.disorder, gc)?;
        let weights = ctx.ensemble(&format!("g_c={gc}"), |s, k| {
            let d = diagonalize(&lattice, &params, &sample_disorder(&params, s, k))?;
            localized_state_weights(&d, origin)
        })?;
        let profile = profile_log_mean(&weights, &lattice, origin)?;
        let analytic = mean_tail(gc, p.disorder, n)?.value;
        for k in 0..profile.distance.len() {
            table.push(vec![
                profile.distance[k].into(),
                profile.log_mean[k].into(),
                analytic.into(),
                gc.into(),
                profile.count[k].into(),
            ]);
        }
        let tail: Vec<f64> = profile
            .distance
            .iter()
            .zip(&profile.log_mean)
            .filter(|(r, v)| **r >= p.tail_from && **v > 0.0)
            .map(|(_, v)| *v)
            .collect();
        let level = (!tail.is_empty())
            .then(|| (tail.iter().map(|v| v.ln()).sum::<f64>() / tail.len() as f64).exp());
        let spread = (!tail.is_empty()).then(|| {
            tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / tail.iter().cloned().fold(f64::INFINITY, f64::min)
        });
        let fit = fit_localization_length(&profile, analytic);
        let ratio = level.filter(|_| analytic > 0.0).map(|l| l / analytic);
        fit_table.push(vec![
            gc.into(),
            level.into(),
            spread.into(),
            analytic.into(),
            ratio.into(),
            fit.map(|f| f.xi).into(),
            fit.map(|f| f.r_squared).into(),
            fit.map_or(Cell::Missing, |f| f.points.into()),
        ]);
        summary.push(json!({
            "g_c": gc, "tail_level": level, "tail_max_over_min": spread,
            "analytic_tail": analytic, "floored_samples": profile.floored,
        }));
    }
    ctx.finish(vec![table, fit_table], json!({ "tails": summary }))
}

fn run_return_probability(mut ctx: Ctx, p: &ReturnProbabilityParams) -> Result<RunOutput, CliError> {
    let mut table = Table::new("", RETURN_COLUMNS);
    for &length in &p.lengths {
        let lattice = p.system.lattice(length)?;
        let n = lattice.num_sites();
        let origin = origin_site(&lattice, p.origin);
        for &gc in &p.couplings {
            for &w in &p.disorders {
                let params = model(&p.system, n, w, gc)?;
                let label = format!("N={n} g_c={gc} W={w}");
                let pis = ctx.ensemble(&label, |s, k| {
                    let d = diagonalize(&lattice, &params, &sample_disorder(&params, s, k))?;
                    Ok(InfiniteTimeAverage::new(&d).entry(origin, origin))
                })?;
                let st = stats(&label, &pis)?;
                table.push(vec![w.into(), gc.into(), st.mean.into(), st.sem.into(), st.count.into(), n.into()]);
            }
        }
    }
    ctx.finish(vec![table], json!({}))
}

/// Per realization: `(ε, IPR)` of every dark state.
fn ipr_records(
    ctx: &mut Ctx,
    lattice: &LatticeSpec,
    params: &ModelParams,
    label: &str,
) -> Result<Vec<Vec<(f64, f64)>>, CliError> {
    ctx.ensemble(label, |s, k| {
        let d = diagonalize(lattice, params, &sample_disorder(params, s, k))?;
        Ok(dark_state_records(&d, params)?
            .into_iter()
            .map(|r| (r.epsilon, r.ipr))
            .collect())
    })
}

fn run_ipr_map(mut ctx: Ctx, p: &IprMapParams) -> Result<RunOutput, CliError> {
    let lattice = p.system.lattice(p.length)?;
    let n = lattice.num_sites();
    let mut table = Table::new("", IPR_MAP_COLUMNS);
    for &gc in &p.couplings {
        for &w in &p.disorders {
            let params = model(&p.system, n, w, gc)?;
            let records = ipr_records(&mut ctx, &lattice, &params, &format!("g_c={gc} W={w}"))?;
            for b in bin_by_energy(&records, p.bin_width)? {
                table.push(vec![
                    gc.into(),
                    w.into(),
                    b.lo.into(),
                    b.hi.into(),
                    b.mean.into(),
                    b.sem.into(),
                    b.realizations.into(),
                    b.states.into(),
                ]);
            }
        }
    }
    ctx.finish(vec![table], json!({}))
}

fn run_ipr_scaling(mut ctx: Ctx, p: &IprScalingParams) -> Result<RunOutput, CliError> {
    let mut table = Table::new("", IPR_SCALING_COLUMNS);
    // (point index) -> [(N, mean)]
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); p.points.len()];
    let mut disorders: Vec<f64> = Vec::new();
    for q in &p.points {
        if !disorders.contains(&q.disorder) {
            disorders.push(q.disorder);
        }
    }
    for &length in &p.lengths {
        let lattice = p.system.lattice(length)?;
        let n = lattice.num_sites();
        for &w in &disorders {
            let params = model(&p.system, n, w, p.coupling)?;
            let records = ipr_records(&mut ctx, &lattice, &params, &format!("N={n} W={w}"))?;
            let bins = bin_by_energy(&records, p.bin_width)?;
            for (qi, q) in p.points.iter().enumerate().filter(|(_, q)| q.disorder == w) {
                let k = bin_index(q.epsilon, p.bin_width);
                let lo = k as f64 * p.bin_width;
                match bins.iter().find(|b| bin_index(b.lo + 0.5 * p.bin_width, p.bin_width) == k) {
                    Some(b) => {
                        table.push(vec![
                            w.into(),
                            q.epsilon.into(),
                            lo.into(),
                            n.into(),
                            b.mean.into(),
                            b.sem.into(),
                            b.realizations.into(),
                        ]);
                        series[qi].push((n as f64, b.mean));
                    }
                    None => table.push(vec![
                        w.into(),
                        q.epsilon.into(),
                        lo.into(),
                        n.into(),
                        Cell::Missing,
                        Cell::Missing,
                        0usize.into(),
                    ]),
                }
            }
        }
    }
    let mut fit_table = Table::new("_fit", IPR_SCALING_FIT_COLUMNS);
    let mut summary = Vec::new();
    for (q, s) in p.points.iter().zip(&series) {
        let (x, y): (Vec<f64>, Vec<f64>) = s.iter().map(|(n, v)| (n.ln(), v.ln())).unzip();
        let fit = linear_fit(&x, &y);
        fit_table.push(vec![
            q.disorder.into(),
            q.epsilon.into(),
            fit.map(|f| f.slope).into(),
            fit.map(|f| f.slope_stderr).into(),
            fit.map(|f| f.intercept).into(),
            fit.map(|f| f.r_squared).into(),
        ]);
        summary.push(json!({
            "W": q.disorder, "epsilon": q.epsilon,
            "slope": fit.map(|f| f.slope), "ipr_largest_N": s.last().map(|v| v.1),
        }));
    }
    ctx.finish(vec![table, fit_table], json!({ "points": summary }))
}

fn run_spacing(mut ctx: Ctx, p: &SpacingParams) -> Result<RunOutput, CliError> {
    let lattice = p.system.lattice(p.length)?;
    let n = lattice.num_sites();
    let mut hist = Table::new("", SPACING_HIST_COLUMNS);
    let mut ks = Table::new("_ks", SPACING_KS_COLUMNS);
    let mut summary = Vec::new();
    for r in &p.regimes {
        let params = model(&p.system, n, r.disorder, p.coupling)?;
        let levels = ctx.ensemble(&format!("{} W={}", r.label, r.disorder), |s, k| {
            let d = diagonalize(&lattice, &params, &sample_disorder(&params, s, k))?;
            Ok(dark_state_records(&d, &params)?
                .into_iter()
                .map(|x| x.epsilon)
                .collect::<Vec<f64>>())
        })?;
        let sample = harvest_spacings(&levels, r.window)?;
        let (best, d) = best_match(&sample.spacings);
        let (centres, density) = spacing_histogram(&sample.spacings, p.histogram_bins, p.histogram_max);
        for (c, v) in centres.iter().zip(&density) {
            hist.push(vec![r.label.as_str().into(), r.disorder.into(), (*c).into(), (*v).into()]);
        }
        ks.push(vec![
            r.label.as_str().into(),
            r.disorder.into(),
            r.window.0.into(),
            r.window.1.into(),
            d[0].into(),
            d[1].into(),
            d[2].into(),
            best.name().into(),
            sample.spacings.len().into(),
            sample.realizations.into(),
        ]);
        summary.push(json!({ "regime": r.label, "best": best.name(), "ks": d }));
    }
    ctx.finish(vec![hist, ks], json!({ "regimes": summary }))
}

fn run_deviation(mut ctx: Ctx, p: &DeviationParams) -> Result<RunOutput, CliError> {
    let lattice = p.system.lattice(p.length)?;
    let n = lattice.num_sites();
    let nf = n as f64;
    let mut table = Table::new("", DEVIATION_COLUMNS);
    for &w in &p.disorders {
        let params = model(&p.system, n, w, p.coupling)?;
        let label = format!("W={w}");
        // Per realization: mean |Δ|, mean |Δ|/(N s/2), mean Δ, state count.
        let recs = ctx.ensemble(&label, |s, k| {
            let disorder = sample_disorder(&params, s, k);
            let d = diagonalize(&lattice, &params, &disorder)?;
            let dev = dark_state_deviation(&d, &disorder, &params)?;
            let m = dev.len().max(1) as f64;
            let abs = dev.iter().map(|x| x.delta.abs()).sum::<f64>() / m;
            let rel = dev
                .iter()
                .map(|x| x.delta.abs() / (0.5 * nf * x.spacing))
                .sum::<f64>()
                / m;
            let signed = dev.iter().map(|x| x.delta).sum::<f64>() / m;
            Ok((abs, rel, signed, dev.len()))
        })?;
        let abs = stats(&label, &recs.iter().map(|r| r.0).collect::<Vec<_>>())?;
        let rel = stats(&label, &recs.iter().map(|r| r.1).collect::<Vec<_>>())?;
        let signed = stats(&label, &recs.iter().map(|r| r.2).collect::<Vec<_>>())?;
        let states: usize = recs.iter().map(|r| r.3).sum();
        table.push(vec![
            w.into(),
            p.coupling.into(),
            abs.mean.into(),
            abs.sem.into(),
            rel.mean.into(),
            rel.sem.into(),
            signed.mean.into(),
            states.into(),
            abs.count.into(),
            n.into(),
        ]);
    }
    ctx.finish(vec![table], json!({}))
}

fn run_transport(mut ctx: Ctx, p: &TransportParams) -> Result<RunOutput, CliError> {
    let mut table = Table::new("", TRANSPORT_COLUMNS);
    let mut raw = Table::new("_raw", TRANSPORT_RAW_COLUMNS);
    let mut summary = Vec::new();
    for &gc in &p.couplings {
        let mut means = Vec::new();
        for &length in &p.lengths {
            let lattice = p.system.lattice(length)?;
            let n = lattice.num_sites();
            let params = model(&p.system, n, p.disorder, gc)?;
            let opts = OpenSystemOptions::new(p.gamma, p.window.1, p.sample_step, p.integrator);
            let label = format!("g_c={gc} N={n}");
            let recs: Vec<WindowAverage> = ctx.ensemble(&label, |s, k| {
                let h = build_hamiltonian(&lattice, &params, &sample_disorder(&params, s, k))?;
                let trace = evolve_open(&h, &opts)?;
                window_average(&trace.times, &trace.current, p.window)
            })?;
            let st = stats(&label, &recs.iter().map(|r| r.mean).collect::<Vec<_>>())?;
            let first = recs.iter().map(|r| r.first_half).sum::<f64>() / recs.len() as f64;
            let second = recs.iter().map(|r| r.second_half).sum::<f64>() / recs.len() as f64;
            table.push(vec![
                n.into(),
                st.mean.into(),
                st.min.into(),
                st.max.into(),
                p.window.0.into(),
                p.window.1.into(),
                gc.into(),
                st.sem.into(),
                first.into(),
                second.into(),
                st.count.into(),
            ]);
            if ctx.raw {
                for (k, r) in recs.iter().enumerate() {
                    raw.push(vec![
                        gc.into(),
                        n.into(),
                        k.into(),
                        r.mean.into(),
                        r.first_half.into(),
                        r.second_half.into(),
                    ]);
                }
            }
            means.push((n as f64, st.mean));
        }
        let positive: Vec<(f64, f64)> = means.iter().copied().filter(|m| m.1 > 0.0).collect();
        let power = linear_fit(
            &positive.iter().map(|m| m.0.ln()).collect::<Vec<_>>(),
            &positive.iter().map(|m| m.1.ln()).collect::<Vec<_>>(),
        );
        let exponential = linear_fit(
            &positive.iter().map(|m| m.0).collect::<Vec<_>>(),
            &positive.iter().map(|m| m.1.ln()).collect::<Vec<_>>(),
        );
        summary.push(json!({
            "g_c": gc,
            "power_law_slope": power.map(|f| f.slope),
            "power_law_r_squared": power.map(|f| f.r_squared),
            "exponential_rate": exponential.map(|f| f.slope),
            "exponential_r_squared": exponential.map(|f| f.r_squared),
        }));
    }
    let mut tables = vec![table];
    if ctx.raw {
        tables.push(raw);
    }
    ctx.finish(tables, json!({ "fits": summary }))
}

/// Fit window `[t_b/ratio, t_b]` with `t_b` the first time `σ̄²` reaches
/// `fraction` of its late-time plateau. Returns `(t_a, t_b, plateau)`.
pub fn diffusion_window(
    times: &[f64],
    msd_mean: &[f64],
    plateau_from: f64,
    fraction: f64,
    ratio: f64,
) -> Option<(f64, f64, f64)> {
    let t_end = *times.last()?;
    let late: Vec<f64> = times
        .iter()
        .zip(msd_mean)
        .filter(|(t, _)| **t >= plateau_from * t_end)
        .map(|(_, m)| *m)
        .collect();
    if late.is_empty() {
        return None;
    }
    let plateau = late.iter().sum::<f64>() / late.len() as f64;
    let k = msd_mean.iter().position(|&m| m >= fraction * plateau)?;
    let t_b = times[k];
    (t_b > 0.0).then_some((t_b / ratio, t_b, plateau))
}

fn run_diffusion(mut ctx: Ctx, p: &DiffusionParams) -> Result<RunOutput, CliError> {
    let times = linear_grid(0.0, p.t_end, p.time_points);
    let mut table = Table::new("", DIFFUSION_COLUMNS);
    let mut fit_table = Table::new("_fit", DIFFUSION_FIT_COLUMNS);
    let mut summary = Vec::new();
    for &length in &p.lengths {
        let lattice = p.system.lattice(length)?;
        let n = lattice.num_sites();
        let nf = n as f64;
        let origin = origin_site(&lattice, p.origin);
        let mut curves: Vec<(f64, Vec<f64>)> = Vec::new();
        for &gc in &p.couplings {
            let params = model(&p.system, n, p.disorder, gc)?;
            let label = format!("N={n} g_c={gc}");
            let runs = ctx.ensemble(&label, |s, k| {
                let d = diagonalize(&lattice, &params, &sample_disorder(&params, s, k))?;
                msd(&evolve(&d, origin, &times)?, &lattice)
            })?;
            let mut mean_curve = Vec::with_capacity(times.len());
            for (ti, &t) in times.iter().enumerate() {
                let col: Vec<f64> = runs.iter().map(|r| r[ti]).collect();
                let st = stats(&label, &col)?;
                let bound = msd_lower_bound(gc, p.disorder, p.system.detuning, t)?.value;
                table.push(vec![
                    gc.into(),
                    n.into(),
                    t.into(),
                    st.mean.into(),
                    st.sem.into(),
                    (st.mean / nf).into(),
                    (st.sem / nf).into(),
                    bound.into(),
                    st.count.into(),
                ]);
                mean_curve.push(st.mean);
            }
            curves.push((gc, mean_curve));
        }
        // The window comes from the strongest coupling and is shared by all couplings.
        let reference = curves
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("couplings validated nonempty");
        let window = diffusion_window(&times, &reference.1, p.plateau_from, p.plateau_fraction, p.window_ratio);
        for (gc, curve) in &curves {
            let late: Vec<f64> = times
                .iter()
                .zip(curve)
                .filter(|(t, _)| **t >= p.plateau_from * p.t_end)
                .map(|(_, m)| *m)
                .collect();
            let plateau = late.iter().sum::<f64>() / late.len().max(1) as f64;
            let fit = window.and_then(|(ta, tb, _)| {
                let (x, y): (Vec<f64>, Vec<f64>) = times
                    .iter()
                    .zip(curve)
                    .filter(|(t, _)| **t >= ta && **t <= tb)
                    .map(|(t, m)| (*t, *m))
                    .unzip();
                linear_fit(&x, &y).map(|f| (f, x.len()))
            });
            fit_table.push(vec![
                (*gc).into(),
                n.into(),
                window.map(|w| w.0).into(),
                window.map(|w| w.1).into(),
                fit.map(|f| f.0.slope).into(),
                fit.map(|f| f.0.slope / nf).into(),
                fit.map(|f| f.0.intercept).into(),
                fit.map(|f| f.0.r_squared).into(),
                plateau.into(),
                fit.map_or(Cell::Missing, |f| f.1.into()),
            ]);
            summary.push(json!({
                "g_c": gc, "N": n, "window": window.map(|w| [w.0, w.1]),
                "slope": fit.map(|f| f.0.slope), "r_squared": fit.map(|f| f.0.r_squared),
            }));
        }
    }
    ctx.finish(vec![table, fit_table], json!({ "fits": summary }))
}

fn run_fgr_check(mut ctx: Ctx, p: &FgrCheckParams) -> Result<RunOutput, CliError> {
    let params = ModelParams::new(p.n, p.disorder, 0.0, p.coupling)?.with_detuning(p.detuning);
    let lattice = LatticeSpec::chain(p.n, Boundary::Periodic)?;
    let times = linear_grid(p.t_start, p.t_end, p.time_points);
    let recs = ctx.ensemble("fgr", |s, k| {
        let disorder = sample_disorder(&params, s, k);
        let d = diagonalize(&lattice, &params, &disorder)?;
        let mut out = Vec::new();
        for (site, &w) in disorder.w.iter().enumerate() {
            let x = (w + p.detuning).abs() / p.disorder;
            if x < p.site_band.0 || x >= p.site_band.1 {
                continue;
            }
            let escape: Vec<f64> = return_probability(&d, site, &times)?
                .into_iter()
                .map(|q| 1.0 - q)
                .collect();
            let slope = linear_fit(&times, &escape).map_or(f64::NAN, |f| f.slope);
            let rate = fermi_golden_rate(w, p.detuning, p.coupling, p.disorder, p.n)?.value;
            out.push((site, w, rate, slope));
            if out.len() == p.max_sites {
                break;
            }
        }
        Ok(out)
    })?;
    let mut table = Table::new("", FGR_COLUMNS);
    let mut ratios = Vec::new();
    for (k, r) in recs.iter().enumerate() {
        for &(site, w, rate, slope) in r {
            let ratio = slope / rate;
            table.push(vec![k.into(), site.into(), w.into(), rate.into(), slope.into(), ratio.into()]);
            if ratio.is_finite() {
                ratios.push(ratio);
            }
        }
    }
    let summary = if ratios.is_empty() {
        json!({ "sites": 0 })
    } else {
        let st = stats("fgr ratios", &ratios)?;
        json!({ "sites": st.count, "ratio_mean": st.mean, "ratio_sem": st.sem })
    };
    ctx.finish(vec![table], summary)
}

fn run_tail_check(p: &TailCheckParams) -> Result<RunOutput, CliError> {
    let mut table = Table::new("", TAIL_CHECK_COLUMNS);
    let mut worst = 0.0f64;
    for c in &p.cases {
        let closed = mean_tail_with_reference(c.coupling, c.disorder, c.n, p.log_scale * c.disorder)?.value;
        let est = finite_part_tail_numeric(c.coupling, c.disorder, c.n, &p.epsilons, p.log_scale)?;
        let rel = if closed != 0.0 {
            (est.value - closed).abs() / closed.abs()
        } else {
            est.value.abs()
        };
        worst = worst.max(rel);
        table.push(vec![
            c.coupling.into(),
            c.disorder.into(),
            c.n.into(),
            closed.into(),
            est.value.into(),
            rel.into(),
            est.coeff_inverse.into(),
            est.coeff_log.into(),
        ]);
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({ "max_rel_error": worst }),
        failures: Vec::new(),
    })
}

/// Groups rows of a table by the value of a text or numeric column.
pub fn group_rows<'a>(table: &'a Table, column: &str) -> BTreeMap<String, Vec<&'a Vec<Cell>>> {
    let mut out: BTreeMap<String, Vec<&Vec<Cell>>> = BTreeMap::new();
    if let Some(k) = table.column(column) {
        for row in &table.rows {
            let key = match &row[k] {
                Cell::Text(s) => s.clone(),
                other => other.as_f64().map_or(String::new(), |x| x.to_string()),
            };
            out.entry(key).or_default().push(row);
        }
    }
    out
}
