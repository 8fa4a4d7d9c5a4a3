//! Unitary evolution from a single excited emitter, computed exactly in the eigenbasis.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::lattice::LatticeSpec;
use crate::spectral::SpectralDecomposition;

/// Probabilities of `|φ(t)⟩ = e^{−iHt}|i,0⟩` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub origin: usize,
    pub times: Vec<f64>,
    /// `P_ij(t)`, one row of `N` emitter sites per time.
    pub site_probabilities: Vec<Vec<f64>>,
    /// `|⟨G,1|φ(t)⟩|²`.
    pub photon_probability: Vec<f64>,
}

impl EvolutionResult {
    /// `P_ii(t)`.
    pub fn return_probability(&self) -> Vec<f64> {
        self.site_probabilities
            .iter()
            .map(|row| row[self.origin])
            .collect()
    }

    /// Largest deviation of the total probability from one.
    pub fn normalization_error(&self) -> f64 {
        self.site_probabilities
            .iter()
            .zip(&self.photon_probability)
            .map(|(row, p)| (row.iter().sum::<f64>() + p - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenbasis propagation of the state initially on emitter `origin`.
pub fn evolve(
    decomp: &SpectralDecomposition,
    origin: usize,
    times: &[f64],
) -> Result<EvolutionResult> {
    let dim = decomp.num_states();
    let n = decomp.num_emitters();
    if origin >= n {
        return usage(format!("origin {origin} out of range for N = {n}"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return usage("time grid must be finite");
    }
    let overlaps: Vec<f64> = (0..dim).map(|a| decomp.component(a, origin)).collect();
    let mut re = vec![0.0; dim];
    let mut im = vec![0.0; dim];
    let mut site_probabilities = Vec::with_capacity(times.len());
    let mut photon_probability = Vec::with_capacity(times.len());
    for &t in times {
        re.iter_mut().for_each(|x| *x = 0.0);
        im.iter_mut().for_each(|x| *x = 0.0);
        for (a, &c) in overlaps.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (s, co) = (decomp.energies()[a] * t).sin_cos();
            let (cr, ci) = (c * co, -c * s);
            for ((r, i), &v) in re.iter_mut().zip(im.iter_mut()).zip(decomp.vector(a)) {
                *r += cr * v;
                *i += ci * v;
            }
        }
        let probs: Vec<f64> = re.iter().zip(&im).map(|(r, i)| r * r + i * i).collect();
        photon_probability.push(probs[n]);
        site_probabilities.push(probs[..n].to_vec());
    }
    Ok(EvolutionResult {
        origin,
        times: times.to_vec(),
        site_probabilities,
        photon_probability,
    })
}

/// `σ²(t) = Σ_j |i − j|² P_ij(t)` with the lattice's distance convention.
pub fn msd(result: &EvolutionResult, lattice: &LatticeSpec) -> Result<Vec<f64>> {
    let n = lattice.num_sites();
    let d2: Vec<f64> = (0..n)
        .map(|j| lattice.squared_displacement(result.origin, j).map(|d| d as f64))
        .collect::<Result<_>>()?;
    result
        .site_probabilities
        .iter()
        .map(|row| {
            if row.len() != n {
                return usage("evolution and lattice disagree on N");
            }
            Ok(row.iter().zip(&d2).map(|(p, d)| p * d).sum())
        })
        .collect()
}

/// `P_ii(t) = |Σ_α e^{−iE_αt} ψ_α(i)²|²` for one site, `O(N)` per time.
pub fn return_probability(
    decomp: &SpectralDecomposition,
    site: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    if site >= decomp.num_emitters() {
        return usage(format!("site {site} out of range"));
    }
    let weights: Vec<f64> = (0..decomp.num_states())
        .map(|a| decomp.component(a, site).powi(2))
        .collect();
    Ok(times
        .iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for (&w, &e) in weights.iter().zip(decomp.energies()) {
                let (s, c) = (e * t).sin_cos();
                re += w * c;
                im -= w * s;
            }
            re * re + im * im
        })
        .collect())
}

/// Exact `(1/T)∫₀ᵀ P_ij(t) dt = Σ_{αβ} c_α c_β sinc((E_α − E_β)T)` with `c_α = ψ_α(i)ψ_α(j)`.
pub fn time_averaged_probability(
    decomp: &SpectralDecomposition,
    i: usize,
    j: usize,
    horizon: f64,
) -> Result<f64> {
    let n = decomp.num_emitters();
    if i >= n || j >= n || !(horizon > 0.0) {
        return usage("time average needs valid sites and a positive horizon");
    }
    let c: Vec<f64> = (0..decomp.num_states())
        .map(|a| decomp.component(a, i) * decomp.component(a, j))
        .collect();
    let e = decomp.energies();
    let mut total = 0.0;
    for a in 0..c.len() {
        total += c[a] * c[a];
        for b in a + 1..c.len() {
            let x = (e[a] - e[b]) * horizon;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            total += 2.0 * c[a] * c[b] * sinc;
        }
    }
    Ok(total)
}

/// Escape diagnostic of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeCurve {
    pub times: Vec<f64>,
    /// `Q(t) = (1/N) Σ_{a≠b} |U_ab(t)|²`.
    pub exact: Vec<f64>,
    /// Dominant term `(1/N) Σ_a (1 − P_aa(t))`.
    pub approx: Vec<f64>,
}

/// `Q(t)` from unitarity: `Q = (1/N)[N − Σ_a |U_aa|² − Σ_a |U_{a,ph}|²]`.
pub fn escape_qt_single(decomp: &SpectralDecomposition, times: &[f64]) -> EscapeCurve {
    let n = decomp.num_emitters();
    let dim = decomp.num_states();
    let nf = n as f64;
    let mut exact = Vec::with_capacity(times.len());
    let mut approx = Vec::with_capacity(times.len());
    let mut phase = vec![(0.0, 0.0); dim];
    for &t in times {
        for (p, &e) in phase.iter_mut().zip(decomp.energies()) {
            let (s, c) = (e * t).sin_cos();
            *p = (c, -s);
        }
        let (mut diag, mut photon) = (0.0, 0.0);
        for a in 0..n {
            let (mut dr, mut di, mut pr, mut pi) = (0.0, 0.0, 0.0, 0.0);
            for (alpha, &(c, s)) in phase.iter().enumerate() {
                let v = decomp.vector(alpha);
                let va = v[a];
                let w = va * va;
                dr += w * c;
                di += w * s;
                let x = va * v[n];
                pr += x * c;
                pi += x * s;
            }
            diag += dr * dr + di * di;
            photon += pr * pr + pi * pi;
        }
        exact.push((nf - diag - photon) / nf);
        approx.push((nf - diag) / nf);
    }
    EscapeCurve {
        times: times.to_vec(),
        exact,
        approx,
    }
}

/// Realization average of [`escape_qt_single`].
pub fn escape_qt(decomps: &[SpectralDecomposition], times: &[f64]) -> Result<EscapeCurve> {
    if decomps.is_empty() {
        return usage("escape diagnostic of an empty ensemble");
    }
    let mut acc = EscapeCurve {
        times: times.to_vec(),
        exact: vec![0.0; times.len()],
        approx: vec![0.0; times.len()],
    };
    for d in decomps {
        let c = escape_qt_single(d, times);
        for k in 0..times.len() {
            acc.exact[k] += c.exact[k];
            acc.approx[k] += c.approx[k];
        }
    }
    let m = decomps.len() as f64;
    acc.exact.iter_mut().for_each(|x| *x /= m);
    acc.approx.iter_mut().for_each(|x| *x /= m);
    Ok(acc)
}

/// Logarithmically spaced grid of `count` points on `[t0, t1]`.
pub fn log_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t1.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// Uniform grid of `count` points on `[t0, t1]`.
pub fn linear_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| t0 + (t1 - t0) * k as f64 / (count.max(2) - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, LatticeSpec};
    use crate::localization::InfiniteTimeAverage;
    use crate::model::{build_hamiltonian, sample_disorder, ModelParams};
    use crate::spectral::{diagonalize_arrowhead, diagonalize_dense};

    fn setup(n: usize, w: f64, j: f64, gc: f64) -> (LatticeSpec, SpectralDecomposition) {
        let lat = LatticeSpec::chain(n, Boundary::Open).unwrap();
        let p = ModelParams::new(n, w, j, gc).unwrap();
        let d = sample_disorder(&p, 21, 0);
        let h = build_hamiltonian(&lat, &p, &d).unwrap();
        (lat, diagonalize_dense(&h).unwrap())
    }

    #[test]
    fn initial_condition_and_unitarity() {
        let (lat, dec) = setup(30, 5.0, 1.0, 4.0);
        let times = linear_grid(0.0, 20.0, 41);
        let r = evolve(&dec, 15, &times).unwrap();
        assert!((r.site_probabilities[0][15] - 1.0).abs() < 1e-12);
        assert!(r.normalization_error() < 1e-10);
        assert!(r.site_probabilities.iter().flatten().all(|&p| (-1e-15..=1.0 + 1e-12).contains(&p)));
        assert!(msd(&r, &lat).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn decoupled_site_stays_put() {
        let (_, dec) = setup(10, 3.0, 0.0, 0.0);
        let r = evolve(&dec, 4, &[0.0, 1.0, 100.0]).unwrap();
        for row in &r.site_probabilities {
            assert!((row[4] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn time_reversal_symmetry() {
        let (_, dec) = setup(20, 4.0, 1.0, 3.0);
        let fwd = evolve(&dec, 3, &[0.7, 2.9]).unwrap();
        let bwd = evolve(&dec, 3, &[-0.7, -2.9]).unwrap();
        for (a, b) in fwd.site_probabilities.iter().flatten().zip(bwd.site_probabilities.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn short_time_escape_is_quadratic() {
        let (_, dec) = setup(20, 4.0, 1.0, 3.0);
        let times = [1e-3, 2e-3, 3e-3, 4e-3];
        let p = return_probability(&dec, 7, &times).unwrap();
        let coeff: Vec<f64> = p.iter().zip(&times).map(|(p, t)| (1.0 - p) / (t * t)).collect();
        assert!(coeff[0] > 0.0);
        assert!((coeff[0] - coeff[3]).abs() < 1e-3 * coeff[0]);
        let direct = evolve(&dec, 7, &times).unwrap().return_probability();
        for (a, b) in p.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn long_time_average_approaches_diagonal_ensemble() {
        let (_, dec) = setup(20, 6.0, 1.0, 3.0);
        let pi = InfiniteTimeAverage::new(&dec);
        for (i, j) in [(0, 0), (5, 9), (10, 10)] {
            let avg = time_averaged_probability(&dec, i, j, 1e4).unwrap();
            assert!((avg - pi.entry(i, j)).abs() < 1e-2);
        }
    }

    #[test]
    fn escape_exact_and_dominant_term() {
        let n = 60;
        let p = ModelParams::new(n, 1.0, 0.0, 0.5).unwrap();
        let decs: Vec<_> = (0..3)
            .map(|k| diagonalize_arrowhead(&sample_disorder(&p, 2, k), &p).unwrap())
            .collect();
        let times = log_grid(0.1, 1000.0, 30);
        let q = escape_qt(&decs, &times).unwrap();
        let q0 = escape_qt(&decs, &[0.0]).unwrap();
        assert!(q0.exact[0].abs() < 1e-12 && q0.approx[0].abs() < 1e-12);
        // The difference is bounded by 3/N.
        for (e, a) in q.exact.iter().zip(&q.approx) {
            assert!(a - e >= -1e-12 && a - e <= 3.0 / n as f64);
        }
        // Brute force Σ_{a≠b}|U_ab|² from the evolved states.
        let d = &decs[0];
        let t = 3.0;
        let mut brute = 0.0;
        for a in 0..n {
            let r = evolve(d, a, &[t]).unwrap();
            brute += r.site_probabilities[0].iter().enumerate().filter(|&(b, _)| b != a).map(|(_, p)| p).sum::<f64>();
        }
        let single = escape_qt_single(d, &[t]);
        assert!((brute / n as f64 - single.exact[0]).abs() < 1e-12);
    }
}
