//! Model parameters, disorder sampling and the single-excitation Hamiltonian.
//!
//! Basis ordering used everywhere in the crate: rows `0..N` are the emitter
//! states `|i,0⟩`, row `N` is the photon state `|G,1⟩`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::lattice::LatticeSpec;

/// Where the zero of energy sits relative to the bare emitter and cavity frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyReference {
    /// `ω_e = δ/2`, `ω_c = −δ/2`: both at zero on resonance.
    #[default]
    Symmetric,
    /// `ω_c = 0`, `ω_e = δ`.
    CavityAtZero,
}

/// Physical parameters. Energies are in units of `J` when `J > 0`, of `W` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of emitters `N`.
    pub n: usize,
    /// Disorder width `W`.
    pub disorder: f64,
    /// Nearest-neighbour hopping `J`.
    pub hopping: f64,
    /// Collective coupling `g_c = g·√N`.
    pub collective_coupling: f64,
    /// Detuning `δ = ω_e − ω_c`.
    #[serde(default)]
    pub detuning: f64,
    #[serde(default)]
    pub energy_reference: EnergyReference,
}

impl ModelParams {
    pub fn new(n: usize, disorder: f64, hopping: f64, collective_coupling: f64) -> Result<Self> {
        let p = Self {
            n,
            disorder,
            hopping,
            collective_coupling,
            detuning: 0.0,
            energy_reference: EnergyReference::Symmetric,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return usage(format!("need at least 2 emitters, got {}", self.n));
        }
        for (name, v) in [
            ("disorder width", self.disorder),
            ("hopping", self.hopping),
            ("collective coupling", self.collective_coupling),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return usage(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !self.detuning.is_finite() {
            return usage("detuning must be finite");
        }
        Ok(())
    }

    /// Per-emitter coupling `g = g_c/√N`.
    pub fn coupling(&self) -> f64 {
        self.collective_coupling / (self.n as f64).sqrt()
    }

    pub fn emitter_frequency(&self) -> f64 {
        match self.energy_reference {
            EnergyReference::Symmetric => 0.5 * self.detuning,
            EnergyReference::CavityAtZero => self.detuning,
        }
    }

    pub fn cavity_frequency(&self) -> f64 {
        match self.energy_reference {
            EnergyReference::Symmetric => -0.5 * self.detuning,
            EnergyReference::CavityAtZero => 0.0,
        }
    }

    /// Dark-band energy rescaled to `[0, 1]`: `ε = (E − ω_e + W/2)/W`.
    pub fn renormalized_energy(&self, energy: f64) -> Result<f64> {
        crate::localization::renormalize_energy(energy - self.emitter_frequency(), self.disorder)
    }
}

/// On-site energies `w_i` for one disorder realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub w: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

/// The random stream for realization `index` of master seed `seed`.
///
/// ChaCha keyed by the master seed, with the realization index as the stream
/// id, so every realization is addressable without drawing the ones before it.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw `N` independent on-site energies uniform on `[−W/2, W/2)`.
pub fn sample_disorder(params: &ModelParams, seed: u64, index: u64) -> DisorderRealization {
    let w = if params.disorder == 0.0 {
        vec![0.0; params.n]
    } else {
        let mut rng = realization_rng(seed, index);
        (0..params.n)
            .map(|_| params.disorder * (rng.random::<f64>() - 0.5))
            .collect()
    };
    DisorderRealization { w, seed, index }
}

/// Dense real symmetric `(N+1)×(N+1)` Hamiltonian, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl HamiltonianMatrix {
    /// Wrap row-major data; the matrix must be square and symmetric.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim < 2 || data.len() != dim * dim {
            return usage(format!(
                "expected {dim}×{dim} = {} entries, got {}",
                dim * dim,
                data.len()
            ));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-14 * scale {
                    return usage(format!("matrix not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Matrix dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of emitters `N`.
    pub fn num_emitters(&self) -> usize {
        self.dim - 1
    }

    /// Index of the photon state `|G,1⟩`.
    pub fn photon_index(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// True when the emitter block is diagonal (`J = 0` structure).
    pub fn is_arrowhead(&self) -> bool {
        let n = self.num_emitters();
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Non-zero pattern as `(row, col, value)` triples in row-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Assemble `Ĥ = Ĥ₀ + Ĥ_I` in the single-excitation basis.
pub fn build_hamiltonian(
    lattice: &LatticeSpec,
    params: &ModelParams,
    disorder: &DisorderRealization,
) -> Result<HamiltonianMatrix> {
    params.validate()?;
    let n = params.n;
    if lattice.num_sites() != n {
        return usage(format!(
            "lattice has {} sites but parameters specify N = {n}",
            lattice.num_sites()
        ));
    }
    if disorder.w.len() != n {
        return usage(format!(
            "disorder realization has {} energies, expected {n}",
            disorder.w.len()
        ));
    }
    let dim = n + 1;
    let mut data = vec![0.0; dim * dim];
    let we = params.emitter_frequency();
    for (i, w) in disorder.w.iter().enumerate() {
        data[i * dim + i] = we + w;
    }
    if params.hopping != 0.0 {
        for (i, j) in lattice.bonds() {
            data[i * dim + j] = -params.hopping;
            data[j * dim + i] = -params.hopping;
        }
    }
    let g = params.coupling();
    for i in 0..n {
        data[i * dim + n] = g;
        data[n * dim + i] = g;
    }
    data[n * dim + n] = params.cavity_frequency();
    Ok(HamiltonianMatrix { dim, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn zero_width_disorder_is_zero() {
        let p = ModelParams::new(7, 0.0, 1.0, 1.0).unwrap();
        assert!(sample_disorder(&p, 3, 4).w.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn disorder_is_reproducible_and_bounded() {
        let p = ModelParams::new(1000, 25.0, 1.0, 0.0).unwrap();
        let a = sample_disorder(&p, 17, 5);
        let b = sample_disorder(&p, 17, 5);
        assert_eq!(a, b);
        assert_ne!(a.w, sample_disorder(&p, 17, 6).w);
        assert_ne!(a.w, sample_disorder(&p, 18, 5).w);
        assert!(a.w.iter().all(|w| (-12.5..=12.5).contains(w)));
    }

    #[test]
    fn disorder_moments_match_uniform() {
        let n = 100_000;
        let width = 25.0;
        let p = ModelParams::new(n, width, 1.0, 0.0).unwrap();
        let w = sample_disorder(&p, 2024, 0).w;
        let mean = w.iter().sum::<f64>() / n as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Uniform on [-W/2, W/2]: variance W²/12, fourth central moment W⁴/80.
        let sigma2 = width * width / 12.0;
        let mu4 = width.powi(4) / 80.0;
        assert!(mean.abs() < 3.0 * (sigma2 / n as f64).sqrt(), "mean {mean}");
        let var_sd = ((mu4 - sigma2 * sigma2) / n as f64).sqrt();
        assert!((var - sigma2).abs() < 3.0 * var_sd, "var {var} vs {sigma2}");
    }

    #[test]
    fn two_site_arrowhead() {
        let lat = LatticeSpec::chain(2, Boundary::Open).unwrap();
        let p = ModelParams::new(2, 1.0, 0.0, 2.0f64.sqrt()).unwrap();
        let d = DisorderRealization {
            w: vec![-0.3, 0.4],
            seed: 0,
            index: 0,
        };
        let h = build_hamiltonian(&lat, &p, &d).unwrap();
        let g = 1.0;
        let expect = [-0.3, 0.0, g, 0.0, 0.4, g, g, g, 0.0];
        for (a, b) in h.as_row_major().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(h.is_arrowhead());
    }

    #[test]
    fn uncoupled_matrix_is_diagonal() {
        let lat = LatticeSpec::chain(6, Boundary::Periodic).unwrap();
        let p = ModelParams::new(6, 3.0, 0.0, 0.0).unwrap();
        let d = sample_disorder(&p, 1, 0);
        let h = build_hamiltonian(&lat, &p, &d).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j && i < 6 { d.w[i] } else { 0.0 };
                assert_eq!(h.get(i, j), expect);
            }
        }
    }

    #[test]
    fn structural_invariants() {
        let lat = LatticeSpec::cubic(3, Boundary::Periodic).unwrap();
        let p = ModelParams::new(27, 5.0, 1.0, 3.0).unwrap().with_detuning(0.4);
        let d = sample_disorder(&p, 9, 2);
        let h = build_hamiltonian(&lat, &p, &d).unwrap();
        let n = 27;
        let trace: f64 = (0..n).map(|i| h.get(i, i)).sum();
        let expect = n as f64 * p.emitter_frequency() + d.w.iter().sum::<f64>();
        assert!((trace - expect).abs() < 1e-12);
        let photon_row: Vec<f64> = (0..n).map(|i| h.get(n, i)).collect();
        assert!(photon_row.iter().all(|&v| v == p.coupling()));
        assert_eq!(h.get(n, n), p.cavity_frequency());
        for i in 0..=n {
            for j in 0..=n {
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
        for i in 0..n {
            let nb = lat.neighbors(i).unwrap();
            for j in 0..n {
                if i != j {
                    let expect = if nb.contains(&j) { -1.0 } else { 0.0 };
                    assert_eq!(h.get(i, j), expect);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let lat = LatticeSpec::chain(5, Boundary::Open).unwrap();
        let p = ModelParams::new(6, 1.0, 1.0, 1.0).unwrap();
        let d = sample_disorder(&p, 0, 0);
        assert!(build_hamiltonian(&lat, &p, &d).is_err());
    }
}
