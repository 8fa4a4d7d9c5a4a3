//! Closed-form perturbative predictions for weak light–matter coupling at `J = 0`.
//!
//! Every formula returns an [`AnalyticPrediction`]: the value is always
//! reported, together with a flag telling whether the parameters sit inside
//! the regime where the expansion holds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::numeric::gauss_legendre;

/// Ratio below which a small parameter counts as "≪".
pub const VALIDITY_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPrediction {
    pub value: f64,
    pub valid: bool,
    pub validity: &'static str,
}

impl AnalyticPrediction {
    fn new(value: f64, valid: bool, validity: &'static str) -> Self {
        Self {
            value,
            valid,
            validity,
        }
    }
}

fn require_width(w: f64) -> Result<()> {
    if !(w > 0.0) {
        return usage(format!("disorder width must be positive, got W = {w}"));
    }
    Ok(())
}

/// Second-order amplitude `b = g²/((w_i − w_j)(w_i + δ))` of a state localized on `i` at site `j`.
pub fn pert_amplitude(wi: f64, wj: f64, detuning: f64, g: f64) -> AnalyticPrediction {
    let den = (wi - wj) * (wi + detuning);
    let g2 = g * g;
    let value = if den == 0.0 {
        if g2 == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        g2 / den
    };
    AnalyticPrediction::new(
        value,
        den != 0.0 && g2 < VALIDITY_RATIO * den.abs(),
        "g² ≪ |(w_i − w_j)(w_i + δ)|",
    )
}

/// Smallest possible `|b|²` for on-site energies in `[−W/2, W/2]` at `δ = 0`.
pub fn tail_lower_bound(gc: f64, w: f64, n: usize) -> Result<f64> {
    require_width(w)?;
    let n = n as f64;
    Ok(4.0 * gc.powi(4) / (n * n * w.powi(4)))
}

/// Disorder-averaged squared amplitude `4g_c⁴[4 − 2 ln 4]/(N W⁴)`.
pub fn mean_tail(gc: f64, w: f64, n: usize) -> Result<AnalyticPrediction> {
    mean_tail_with_reference(gc, w, n, 0.25 * w)
}

/// Finite-part average with the logarithmic divergences at `ω = ±W/2`
/// subtracted relative to the length `ell`; `ell = W/4` gives [`mean_tail`].
pub fn mean_tail_with_reference(gc: f64, w: f64, n: usize, ell: f64) -> Result<AnalyticPrediction> {
    require_width(w)?;
    if n == 0 || !(ell > 0.0) {
        return usage("mean tail needs N ≥ 1 and a positive reference length");
    }
    let value = 4.0 * gc.powi(4) * (4.0 - 2.0 * (w / ell).ln()) / (n as f64 * w.powi(4));
    Ok(AnalyticPrediction::new(value, gc < VALIDITY_RATIO * w, "g_c ≪ W"))
}

/// Schrieffer–Wolff correlated hopping `(g²/2)(1/(w_i + δ) + 1/(w_j + δ))`.
pub fn sw_effective_hopping(wi: f64, wj: f64, detuning: f64, g: f64) -> AnalyticPrediction {
    let (di, dj) = (wi + detuning, wj + detuning);
    let value = 0.5 * g * g * (1.0 / di + 1.0 / dj);
    AnalyticPrediction::new(
        value,
        di != 0.0 && dj != 0.0 && g < VALIDITY_RATIO * di.abs().min(dj.abs()),
        "g ≪ |w_i + δ| and g ≪ |w_j + δ|",
    )
}

/// Golden-rule escape rate `Γ_i = 2π g_c⁴/(N W (w_i + δ)²)`.
pub fn fermi_golden_rate(
    wi: f64,
    detuning: f64,
    gc: f64,
    w: f64,
    n: usize,
) -> Result<AnalyticPrediction> {
    require_width(w)?;
    let d = wi + detuning;
    let nf = n as f64;
    let value = if gc == 0.0 {
        0.0
    } else {
        2.0 * PI * gc.powi(4) / (nf * w * d * d)
    };
    let g = gc / nf.sqrt();
    Ok(AnalyticPrediction::new(
        value,
        d != 0.0 && g < VALIDITY_RATIO * d.abs(),
        "g ≪ |w_i + δ|, 1/W ≪ t ≪ N/W, Γ_i t ≪ 1",
    ))
}

/// `π g_c⁴ t / (3W(W/2 + |δ|)²)`, the golden-rule estimate of `σ̄²/N`.
pub fn msd_lower_bound(gc: f64, w: f64, detuning: f64, t: f64) -> Result<AnalyticPrediction> {
    require_width(w)?;
    let value = PI * gc.powi(4) * t / (3.0 * w * (0.5 * w + detuning.abs()).powi(2));
    Ok(AnalyticPrediction::new(value, true, "1/W ≪ t ≪ N/W"))
}

/// Numerical finite part of the averaged squared amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePartEstimate {
    /// Excision radii used, in units of `W`.
    pub epsilons: Vec<f64>,
    /// Truncated double integrals `I(ε)` for `g_c = 1, N = 1, W = 1`.
    pub truncated: Vec<f64>,
    pub coeff_inverse: f64,
    pub coeff_log: f64,
    /// Extrapolated finite part, scaled to the requested `(g_c, W, N)`.
    pub value: f64,
}

/// Gauss–Legendre on `x = anchor + direction·e^u`, `u ∈ [ln d0, ln d1]`, which
/// resolves integrands blowing up like inverse powers of `|x − anchor|`.
fn log_panel(
    f: &impl Fn(f64) -> f64,
    anchor: f64,
    direction: f64,
    d0: f64,
    d1: f64,
    panels: usize,
    nodes: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let (x, w) = nodes;
    let (u0, u1) = (d0.ln(), d1.ln());
    let h = (u1 - u0) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let a = u0 + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            let u = a + 0.5 * h * (xi + 1.0);
            let d = u.exp();
            sum += wi * 0.5 * h * d * f(anchor + direction * d);
        }
    }
    sum
}

/// Finite part of `∫∫ dω dω' ω⁻²(ω − ω')⁻²` over `[−1/2, 1/2]²` by excision.
///
/// The inner integral is regularized as `∫_{|ω'−ω|>ε} (ω − ω')⁻² dω' − 2/ε`;
/// the outer excises `|ω| < ε` and `|ω ∓ 1/2| < ε`. The truncated values are
/// fitted to `A/ε + B ln(ε/ℓ) + C`, plus `Dε` when four radii are given, and
/// `C` is the finite part.
pub fn finite_part_tail_numeric(
    gc: f64,
    w: f64,
    n: usize,
    epsilons: &[f64],
    ell: f64,
) -> Result<FinitePartEstimate> {
    require_width(w)?;
    if !(3..=4).contains(&epsilons.len()) || epsilons.iter().any(|&e| !(e > 0.0 && e < 0.1)) {
        return usage("finite-part extrapolation needs three or four excision radii in (0, 0.1)·W");
    }
    let nodes = gauss_legendre(24);
    let a = 0.5;
    let truncated: Vec<f64> = epsilons
        .iter()
        .map(|&eps| {
            let inner = |om: f64| {
                let kernel = |wp: f64| 1.0 / (om - wp).powi(2);
                let left = log_panel(&kernel, om, -1.0, eps, om + a, 8, &nodes);
                let right = log_panel(&kernel, om, 1.0, eps, a - om, 8, &nodes);
                left + right - 2.0 / eps
            };
            let outer = |om: f64| inner(om) / (om * om);
            // Each half of the band is split at its midpoint and mapped towards
            // the nearer singular point.
            let mut total = 0.0;
            for s in [-1.0, 1.0] {
                total += log_panel(&outer, 0.0, s, eps, 0.5 * a, 16, &nodes);
                total += log_panel(&outer, s * a, -s, eps, 0.5 * a, 16, &nodes);
            }
            total
        })
        .collect();

    let k = epsilons.len();
    let rows: Vec<Vec<f64>> = epsilons
        .iter()
        .zip(&truncated)
        .map(|(&e, &i)| {
            let mut r = vec![1.0 / e, (e / ell).ln(), 1.0, e];
            r.truncate(k);
            r.push(i);
            r
        })
        .collect();
    let coeffs = solve_dense(rows);
    let (coeff_inverse, coeff_log, c) = (coeffs[0], coeffs[1], coeffs[2]);
    let nf = n as f64;
    // ρ² g⁴ / N with ρ = N/W and g² = g_c²/N, on a band rescaled to unit width.
    let value = gc.powi(4) * c / (nf * w.powi(4));
    Ok(FinitePartEstimate {
        epsilons: epsilons.to_vec(),
        truncated,
        coeff_inverse,
        coeff_log,
        value,
    })
}

/// Gauss–Jordan elimination with partial pivoting on an augmented `k×(k+1)` system.
fn solve_dense(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let k = m.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..k).map(|i| m[i][k] / m[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn amplitude_hand_values() {
        assert_eq!(pert_amplitude(1.0, -1.0, 0.0, 0.0).value, 0.0);
        assert!(close(pert_amplitude(1.0, -1.0, 0.0, 0.1).value, 0.005, 1e-14));
        let resonant = pert_amplitude(0.5, 0.5, 0.0, 0.1);
        assert!(!resonant.valid && resonant.value.is_infinite());
    }

    #[test]
    fn amplitude_bound_at_extremal_denominator() {
        let (gc, w, n) = (2.0, 25.0, 100);
        let g = gc / (n as f64).sqrt();
        // Largest denominator: w_i = ±W/2, w_j = ∓W/2.
        let b = pert_amplitude(0.5 * w, -0.5 * w, 0.0, g).value;
        assert!(close(b * b, tail_lower_bound(gc, w, n).unwrap(), 1e-12));
    }

    #[test]
    fn amplitude_is_not_symmetric_but_hopping_is() {
        let (wi, wj, d, g) = (1.3, -0.4, 0.2, 0.05);
        assert!(pert_amplitude(wi, wj, d, g).value != pert_amplitude(wj, wi, d, g).value);
        assert_eq!(
            sw_effective_hopping(wi, wj, d, g).value,
            sw_effective_hopping(wj, wi, d, g).value
        );
    }

    #[test]
    fn hopping_hand_values() {
        assert_eq!(sw_effective_hopping(2.0, -3.0, 0.0, 0.0).value, 0.0);
        assert!(close(sw_effective_hopping(2.0, -3.0, 0.0, 0.5).value, 1.0 / 48.0, 1e-14));
        assert!(close(sw_effective_hopping(0.7, 0.7, 0.1, 0.3).value, 0.09 / 0.8, 1e-14));
    }

    #[test]
    fn tail_hand_values() {
        assert_eq!(mean_tail(0.0, 25.0, 100).unwrap().value, 0.0);
        let v = mean_tail(5.0, 25.0, 100).unwrap().value;
        assert!(close(v, 7.855e-5, 1e-3), "{v}");
        assert!(mean_tail(1.0, 0.0, 100).is_err());
    }

    #[test]
    fn golden_rule_hand_values() {
        assert_eq!(fermi_golden_rate(2.0, 0.0, 0.0, 10.0, 1000).unwrap().value, 0.0);
        let v = fermi_golden_rate(2.0, 0.0, 30.0, 10.0, 1000).unwrap().value;
        assert!(close(v, 127.23, 1e-4), "{v}");
        // 1/N at fixed g_c over a decade.
        let a = fermi_golden_rate(0.3, 0.0, 1.0, 1.0, 200).unwrap().value;
        let b = fermi_golden_rate(0.3, 0.0, 1.0, 1.0, 2000).unwrap().value;
        assert!(close(a / b, 10.0, 1e-12));
    }

    #[test]
    fn msd_bound_hand_values() {
        assert_eq!(msd_lower_bound(50.0, 30.0, 0.0, 0.0).unwrap().value, 0.0);
        let v = msd_lower_bound(50.0, 30.0, 0.0, 1.0).unwrap().value;
        assert!(close(v, 969.6, 1e-4), "{v}");
        let v2 = msd_lower_bound(50.0, 30.0, 0.0, 2.0).unwrap().value;
        assert!(close(v2, 2.0 * v, 1e-14));
    }

    #[test]
    fn finite_part_matches_closed_form() {
        let (gc, w, n) = (1.5, 25.0, 100);
        let est = finite_part_tail_numeric(gc, w, n, &[1e-2, 1e-3, 1e-4, 1e-5], 0.25).unwrap();
        let closed = mean_tail(gc, w, n).unwrap().value;
        assert!(close(est.value, closed, 1e-2), "{} vs {closed}", est.value);
        // Regularized inner integral at ω = 0 is −4, giving −8/ε; each band
        // edge contributes 4 ln ε.
        assert!(close(est.coeff_inverse, -8.0, 1e-3), "{}", est.coeff_inverse);
        assert!(close(est.coeff_log, 8.0, 1e-3), "{}", est.coeff_log);
    }
}
