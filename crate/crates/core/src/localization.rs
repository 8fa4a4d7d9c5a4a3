//! Localization diagnostics: inverse participation ratios, infinite-time
//! averaged probabilities, renormalized energies and disorder-averaged
//! eigenstate profiles.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::ModelParams;
use crate::numeric::{linear_fit, LinearFit};
use crate::spectral::{dark_state_indices, SpectralDecomposition};

/// Eigenvalues closer than this fraction of the spectral span share a block in Π.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Samples below this are dropped from logarithmic averages.
pub const LOG_FLOOR: f64 = 1e-300;

/// `IPR(E_α) = Σ_i |a_{αi}|⁴` of the normalized emitter amplitudes.
pub fn ipr(decomp: &SpectralDecomposition, alpha: usize) -> Result<f64> {
    if alpha >= decomp.num_states() {
        return usage(format!("state index {alpha} out of range"));
    }
    if decomp.is_pure_photon(alpha) {
        return usage(format!("IPR undefined for pure photon state {alpha}"));
    }
    Ok(decomp.emitter_weights(alpha).iter().map(|p| p * p).sum())
}

/// `ε = (E + W/2)/W` for an energy measured from the emitter frequency.
///
/// Values outside the bare band are returned unclamped.
pub fn renormalize_energy(energy: f64, disorder: f64) -> Result<f64> {
    if !(disorder > 0.0) {
        return usage(format!(
            "renormalized energy needs W > 0, got W = {disorder}"
        ));
    }
    Ok((energy + 0.5 * disorder) / disorder)
}

/// Per-state quantities of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub alpha: usize,
    pub energy: f64,
    pub epsilon: f64,
    pub ipr: f64,
    pub photon_weight: f64,
}

/// Records for every dark state.
pub fn dark_state_records(
    decomp: &SpectralDecomposition,
    params: &ModelParams,
) -> Result<Vec<StateRecord>> {
    dark_state_indices(decomp, params)
        .into_iter()
        .map(|alpha| {
            Ok(StateRecord {
                alpha,
                energy: decomp.energies()[alpha],
                epsilon: params.renormalized_energy(decomp.energies()[alpha])?,
                ipr: ipr(decomp, alpha)?,
                photon_weight: decomp.photon_weights()[alpha],
            })
        })
        .collect()
}

/// Index ranges of (numerically) degenerate eigenvalues.
pub fn degenerate_blocks(decomp: &SpectralDecomposition) -> Vec<Range<usize>> {
    let e = decomp.energies();
    let span = e.last().copied().unwrap_or(0.0) - e.first().copied().unwrap_or(0.0);
    let tol = DEGENERACY_TOL * span;
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=e.len() {
        if k == e.len() || e[k] - e[k - 1] > tol {
            blocks.push(start..k);
            start = k;
        }
    }
    blocks
}

/// Diagonal-ensemble value `Π_ij` of `P_ij(t) = |⟨j|e^{−iHt}|i⟩|²`.
///
/// Cross terms inside degenerate blocks are retained, so the result is the
/// exact long-time average even for clean (degenerate) spectra.
pub struct InfiniteTimeAverage<'a> {
    decomp: &'a SpectralDecomposition,
    blocks: Vec<Range<usize>>,
}

impl<'a> InfiniteTimeAverage<'a> {
    pub fn new(decomp: &'a SpectralDecomposition) -> Self {
        Self {
            decomp,
            blocks: degenerate_blocks(decomp),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let d = self.decomp;
        self.blocks
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    let a = b.start;
                    (d.component(a, i) * d.component(a, j)).powi(2)
                } else {
                    b.clone()
                        .map(|a| d.component(a, i) * d.component(a, j))
                        .sum::<f64>()
                        .powi(2)
                }
            })
            .sum()
    }

    /// `Π_ij` for all emitter sites `j`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let d = self.decomp;
        let n = d.num_emitters();
        let mut out = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for b in &self.blocks {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for a in b.clone() {
                let v = d.vector(a);
                let vi = v[i];
                for (x, vj) in acc.iter_mut().zip(&v[..n]) {
                    *x += vi * vj;
                }
            }
            for (o, x) in out.iter_mut().zip(&acc) {
                *o += x * x;
            }
        }
        out
    }

    /// Return probabilities `Π_ii` for all emitter sites.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.decomp.num_emitters();
        (0..n).map(|i| self.entry(i, i)).collect()
    }
}

/// Convenience wrapper for a single entry.
pub fn infinite_time_pi(decomp: &SpectralDecomposition, i: usize, j: usize) -> Result<f64> {
    let n = decomp.num_emitters();
    if i >= n || j >= n {
        return usage(format!("site pair ({i}, {j}) out of range for N = {n}"));
    }
    Ok(InfiniteTimeAverage::new(decomp).entry(i, j))
}

/// `Σ_α IPR(E_α)·𝒩_α²`, equal to `Σ_i Π_ii` for a non-degenerate spectrum.
pub fn return_probability_sum_rule(decomp: &SpectralDecomposition) -> f64 {
    (0..decomp.num_states())
        .filter(|&a| !decomp.is_pure_photon(a))
        .map(|a| {
            let n2 = decomp.emitter_norms()[a].powi(2);
            let ipr: f64 = decomp.emitter_weights(a).iter().map(|p| p * p).sum();
            ipr * n2
        })
        .sum()
}

/// Emitter weights `|a_{αj}|²` of the eigenstate with the largest weight on `origin`.
pub fn localized_state_weights(decomp: &SpectralDecomposition, origin: usize) -> Result<Vec<f64>> {
    if origin >= decomp.num_emitters() {
        return usage(format!("origin {origin} out of range"));
    }
    let best = (0..decomp.num_states())
        .filter(|&a| !decomp.is_pure_photon(a))
        .max_by(|&a, &b| {
            decomp
                .amplitude(a, origin)
                .abs()
                .total_cmp(&decomp.amplitude(b, origin).abs())
        })
        .ok_or_else(|| Error::Usage("decomposition has no emitter states".into()))?;
    Ok(decomp.emitter_weights(best))
}

/// Geometric-mean eigenstate weight versus distance from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub distance: Vec<f64>,
    pub log_mean: Vec<f64>,
    /// Samples entering each distance.
    pub count: Vec<usize>,
    /// Samples dropped below [`LOG_FLOOR`].
    pub floored: usize,
}

/// Pool `ln|a_j|²` over realizations and over sites at equal distance.
pub fn profile_log_mean(
    weights: &[Vec<f64>],
    lattice: &LatticeSpec,
    origin: usize,
) -> Result<Profile> {
    if weights.is_empty() {
        return usage("profile of an empty ensemble");
    }
    let n = lattice.num_sites();
    let mut by_r2: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    let mut floored = 0;
    let r2: Vec<u64> = (0..n)
        .map(|j| lattice.squared_displacement(origin, j))
        .collect::<Result<_>>()?;
    for w in weights {
        if w.len() != n {
            return usage(format!(
                "profile sample has {} sites, lattice has {n}",
                w.len()
            ));
        }
        for (j, &p) in w.iter().enumerate() {
            let slot = by_r2.entry(r2[j]).or_insert((0.0, 0));
            if p < LOG_FLOOR {
                floored += 1;
                continue;
            }
            slot.0 += p.ln();
            slot.1 += 1;
        }
    }
    let mut out = Profile {
        distance: Vec::new(),
        log_mean: Vec::new(),
        count: Vec::new(),
        floored,
    };
    for (r2, (s, c)) in by_r2 {
        out.distance.push((r2 as f64).sqrt());
        out.log_mean.push(if c > 0 { (s / c as f64).exp() } else { 0.0 });
        out.count.push(c);
    }
    Ok(out)
}

/// Exponential fit `|a|² ∝ exp(−2r/ξ)` of the profile core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationLengthFit {
    pub xi: f64,
    pub points: usize,
    pub r_squared: f64,
}

/// Fit over distances `r > 0` whose profile exceeds ten times `tail`.
pub fn fit_localization_length(profile: &Profile, tail: f64) -> Option<LocalizationLengthFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .distance
        .iter()
        .zip(&profile.log_mean)
        .filter(|(&r, &p)| r > 0.0 && p > 10.0 * tail && p > 0.0)
        .map(|(&r, &p)| (r, p.ln()))
        .unzip();
    let LinearFit {
        slope, r_squared, ..
    } = linear_fit(&x, &y)?;
    (slope < 0.0).then(|| LocalizationLengthFit {
        xi: -2.0 / slope,
        points: x.len(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, LatticeSpec};
    use crate::model::{build_hamiltonian, sample_disorder};
    use crate::spectral::{diagonalize_arrowhead, diagonalize_dense};

    fn decomp(n: usize, w: f64, j: f64, gc: f64, seed: u64) -> SpectralDecomposition {
        let lat = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
        let p = ModelParams::new(n, w, j, gc).unwrap();
        let d = sample_disorder(&p, seed, 0);
        diagonalize_dense(&build_hamiltonian(&lat, &p, &d).unwrap()).unwrap()
    }

    #[test]
    fn renormalized_band_edges() {
        assert_eq!(renormalize_energy(-2.0, 4.0).unwrap(), 0.0);
        assert_eq!(renormalize_energy(0.0, 4.0).unwrap(), 0.5);
        assert_eq!(renormalize_energy(2.0, 4.0).unwrap(), 1.0);
        assert!(renormalize_energy(0.0, 0.0).is_err());
    }

    #[test]
    fn ipr_bounds_and_limits() {
        let dec = decomp(30, 4.0, 1.0, 2.0, 1);
        for a in 0..dec.num_states() {
            let v = ipr(&dec, a).unwrap();
            assert!(v >= 1.0 / 30.0 - 1e-12 && v <= 1.0 + 1e-12);
        }
        // Decoupled, hopping-free: every emitter state sits on one site.
        let dec = decomp(10, 4.0, 0.0, 0.0, 2);
        for a in 0..dec.num_states() {
            if dec.is_pure_photon(a) {
                assert!(ipr(&dec, a).is_err());
            } else {
                assert!((ipr(&dec, a).unwrap() - 1.0).abs() < 1e-14);
            }
        }
        // Clean ring: the q = 0 Bloch state is uniform.
        let dec = decomp(12, 0.0, 1.0, 0.0, 0);
        let lowest = (0..13).find(|&a| !dec.is_pure_photon(a)).unwrap();
        assert!((ipr(&dec, lowest).unwrap() - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_sites_never_leave() {
        let dec = decomp(8, 3.0, 0.0, 0.0, 3);
        let pi = InfiniteTimeAverage::new(&dec);
        for i in 0..8 {
            assert!((pi.entry(i, i) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pi_symmetry_and_sum_rule() {
        let dec = decomp(40, 6.0, 1.0, 3.0, 7);
        let pi = InfiniteTimeAverage::new(&dec);
        for i in 0..40 {
            let row = pi.row(i);
            let total: f64 = row.iter().sum();
            assert!(total <= 1.0 + 1e-12);
            for j in 0..40 {
                assert!((row[j] - pi.entry(i, j)).abs() < 1e-14);
                assert_eq!(pi.entry(i, j), pi.entry(j, i));
                assert!((0.0..=1.0).contains(&row[j]));
            }
        }
        let lhs: f64 = pi.diagonal().iter().sum();
        assert!((lhs - return_probability_sum_rule(&dec)).abs() < 1e-10);
    }

    #[test]
    fn degenerate_block_restores_row_normalization() {
        // Clean Tavis–Cummings: N − 1 degenerate dark states at zero energy.
        let n = 6;
        let dec = decomp(n, 0.0, 0.0, 2.0, 0);
        let blocks = degenerate_blocks(&dec);
        assert_eq!(blocks.len(), 3);
        // Exact long-time average: dark projector weight (1 − 1/N)² plus
        // the two polaritons, each contributing (1/(2N))².
        let expect = (1.0 - 1.0 / n as f64).powi(2) + 2.0 * (0.5 / n as f64).powi(2);
        assert!((infinite_time_pi(&dec, 0, 0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn single_decoupled_profile() {
        let n = 9;
        let lat = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
        let p = ModelParams::new(n, 5.0, 0.0, 0.0).unwrap();
        let d = sample_disorder(&p, 1, 0);
        let dec = diagonalize_arrowhead(&d, &p).unwrap();
        let w = localized_state_weights(&dec, 4).unwrap();
        assert_eq!(w[4], 1.0);
        let prof = profile_log_mean(&[w], &lat, 4).unwrap();
        assert_eq!(prof.distance[0], 0.0);
        assert_eq!(prof.log_mean[0], 1.0);
        assert!(prof.log_mean[1..].iter().all(|&x| x == 0.0));
        assert_eq!(prof.floored, n - 1);
        assert!(profile_log_mean(&[], &lat, 0).is_err());
    }

    #[test]
    fn localization_length_of_synthetic_profile() {
        let xi = 1.7;
        let prof = Profile {
            distance: (0..20).map(f64::from).collect(),
            log_mean: (0..20).map(|r| (-2.0 * r as f64 / xi).exp() + 1e-12).collect(),
            count: vec![1; 20],
            floored: 0,
        };
        let fit = fit_localization_length(&prof, 1e-12).unwrap();
        assert!((fit.xi - xi).abs() < 1e-3);
    }
}
