//! Level-spacing statistics of dark states and their deviation from bare-level midpoints.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::model::{DisorderRealization, ModelParams};
use crate::spectral::{dark_state_indices, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingKind {
    WignerDyson,
    Poisson,
    SemiPoisson,
}

impl SpacingKind {
    pub const ALL: [SpacingKind; 3] = [Self::WignerDyson, Self::Poisson, Self::SemiPoisson];

    pub fn name(self) -> &'static str {
        match self {
            Self::WignerDyson => "wigner_dyson",
            Self::Poisson => "poisson",
            Self::SemiPoisson => "semi_poisson",
        }
    }
}

/// Unit-mean reference density `P(s)`.
pub fn reference_pdf(kind: SpacingKind, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return usage(format!("spacing must be nonnegative, got {s}"));
    }
    Ok(match kind {
        SpacingKind::WignerDyson => 0.5 * PI * s * (-0.25 * PI * s * s).exp(),
        SpacingKind::Poisson => (-s).exp(),
        SpacingKind::SemiPoisson => 4.0 * s * (-2.0 * s).exp(),
    })
}

/// Cumulative distribution of [`reference_pdf`]; zero for negative `s`.
pub fn reference_cdf(kind: SpacingKind, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    match kind {
        SpacingKind::WignerDyson => -(-0.25 * PI * s * s).exp_m1(),
        SpacingKind::Poisson => -(-s).exp_m1(),
        SpacingKind::SemiPoisson => 1.0 - (1.0 + 2.0 * s) * (-2.0 * s).exp(),
    }
}

/// Unfolded spacings pooled over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample {
    pub spacings: Vec<f64>,
    pub window: (f64, f64),
    /// Realizations that contributed at least one spacing.
    pub realizations: usize,
}

/// Spacings of the sorted levels inside `[lo, hi)` divided by their mean.
pub fn unfolded_window_spacings(levels: &[f64], window: (f64, f64)) -> Option<Vec<f64>> {
    let mut inside: Vec<f64> = levels
        .iter()
        .copied()
        .filter(|&e| e >= window.0 && e < window.1)
        .collect();
    if inside.len() < 2 {
        return None;
    }
    inside.sort_by(f64::total_cmp);
    let raw: Vec<f64> = inside.windows(2).map(|p| p[1] - p[0]).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    if !(mean > 0.0) {
        return None;
    }
    Some(raw.into_iter().map(|s| s / mean).collect())
}

/// Pool locally unfolded spacings of each realization's dark-state `ε` values.
pub fn harvest_spacings(levels: &[Vec<f64>], window: (f64, f64)) -> Result<SpacingSample> {
    let mut spacings = Vec::new();
    let mut realizations = 0;
    for l in levels {
        if let Some(s) = unfolded_window_spacings(l, window) {
            spacings.extend(s);
            realizations += 1;
        }
    }
    if realizations == 0 {
        return usage(format!(
            "no realization has two levels in the window [{}, {})",
            window.0, window.1
        ));
    }
    Ok(SpacingSample {
        spacings,
        window,
        realizations,
    })
}

/// Kolmogorov–Smirnov distance between the sample and a reference law.
pub fn distribution_distance(spacings: &[f64], kind: SpacingKind) -> f64 {
    let mut s = spacings.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference_cdf(kind, x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// The reference law with the smallest KS distance, with all three distances.
pub fn best_match(spacings: &[f64]) -> (SpacingKind, [f64; 3]) {
    let d = SpacingKind::ALL.map(|k| distribution_distance(spacings, k));
    let best = (0..3).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    (SpacingKind::ALL[best], d)
}

/// Density-normalized histogram on `[0, max)`; returns bin centres and densities.
pub fn spacing_histogram(spacings: &[f64], bins: usize, max: f64) -> (Vec<f64>, Vec<f64>) {
    let width = max / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in spacings {
        if s >= 0.0 && s < max {
            counts[((s / width) as usize).min(bins - 1)] += 1;
        }
    }
    let norm = spacings.len().max(1) as f64 * width;
    let centres = (0..bins).map(|b| (b as f64 + 0.5) * width).collect();
    let density = counts.iter().map(|&c| c as f64 / norm).collect();
    (centres, density)
}

/// `Δ_α = N(E_α − (w_k + w_{k+1})/2)` for a dark state between bare levels `w_k ≤ E_α < w_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub alpha: usize,
    pub energy: f64,
    pub delta: f64,
    /// Spacing `w_{k+1} − w_k` of the bracketing pair.
    pub spacing: f64,
}

/// Deviations of every dark state bracketed by two bare levels.
pub fn dark_state_deviation(
    decomp: &SpectralDecomposition,
    disorder: &DisorderRealization,
    params: &ModelParams,
) -> Result<Vec<Deviation>> {
    let n = params.n;
    if disorder.w.len() != n || decomp.num_emitters() != n {
        return usage("decomposition, disorder and parameters disagree on N");
    }
    let we = params.emitter_frequency();
    let mut bare: Vec<f64> = disorder.w.iter().map(|w| we + w).collect();
    bare.sort_by(f64::total_cmp);
    let nf = n as f64;
    Ok(dark_state_indices(decomp, params)
        .into_iter()
        .filter_map(|alpha| {
            let e = decomp.energies()[alpha];
            let k = bare.partition_point(|&w| w <= e);
            if k == 0 || k == n || e <= bare[0] {
                return None;
            }
            let (lo, hi) = (bare[k - 1], bare[k]);
            Some(Deviation {
                alpha,
                energy: e,
                delta: nf * (e - 0.5 * (lo + hi)),
                spacing: hi - lo,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{realization_rng, sample_disorder};
    use crate::numeric::gauss_legendre;
    use crate::spectral::diagonalize_arrowhead;
    use rand::Rng;

    fn integrate(f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = gauss_legendre(32);
        let panels = 200;
        let h = 40.0 / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                s += wi * 0.5 * h * f(h * (p as f64 + 0.5 * (xi + 1.0)));
            }
        }
        s
    }

    #[test]
    fn reference_hand_values() {
        assert_eq!(reference_pdf(SpacingKind::Poisson, 0.0).unwrap(), 1.0);
        let wd = reference_pdf(SpacingKind::WignerDyson, 1.0).unwrap();
        assert!((wd - 0.716186).abs() < 1e-6);
        let sp = reference_pdf(SpacingKind::SemiPoisson, 0.5).unwrap();
        assert!((sp - 0.73576).abs() < 1e-5);
        assert!(reference_pdf(SpacingKind::Poisson, -0.1).is_err());
    }

    #[test]
    fn references_are_unit_mean_densities() {
        for k in SpacingKind::ALL {
            let norm = integrate(|s| reference_pdf(k, s).unwrap());
            let mean = integrate(|s| s * reference_pdf(k, s).unwrap());
            assert!((norm - 1.0).abs() < 1e-8, "{k:?} norm {norm}");
            assert!((mean - 1.0).abs() < 1e-8, "{k:?} mean {mean}");
        }
    }

    #[test]
    fn cdfs_integrate_the_densities() {
        let (x, w) = gauss_legendre(40);
        for k in SpacingKind::ALL {
            for s in [0.1, 0.7, 1.5, 3.0] {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * 0.5 * s * reference_pdf(k, 0.5 * s * (xi + 1.0)).unwrap())
                    .sum();
                assert!((q - reference_cdf(k, s)).abs() < 1e-10, "{k:?} {s}");
            }
        }
    }

    #[test]
    fn midpoint_of_two_exponentials_is_semi_poisson() {
        let mut rng = realization_rng(17, 0);
        let mut exp = || -(1.0 - rng.random::<f64>()).ln();
        let sample: Vec<f64> = (0..100_000).map(|_| 0.5 * (exp() + exp())).collect();
        let d = distribution_distance(&sample, SpacingKind::SemiPoisson);
        assert!(d < 0.01, "{d}");
        assert_eq!(best_match(&sample).0, SpacingKind::SemiPoisson);
    }

    #[test]
    fn unfolding_gives_unit_mean() {
        let levels = vec![vec![0.1, 0.13, 0.2, 0.31, 0.5], vec![0.0, 0.4], vec![0.25]];
        let s = harvest_spacings(&levels, (0.0, 0.45)).unwrap();
        assert_eq!(s.realizations, 2);
        let mean = s.spacings.iter().sum::<f64>() / s.spacings.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(s.spacings.iter().all(|&x| x >= 0.0));
        assert!(harvest_spacings(&levels, (0.9, 1.0)).is_err());
    }

    #[test]
    fn histogram_is_normalized() {
        let s: Vec<f64> = (0..1000).map(|i| i as f64 * 0.003).collect();
        let (c, d) = spacing_histogram(&s, 40, 4.0);
        assert_eq!(c.len(), 40);
        assert!((d.iter().sum::<f64>() * 0.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strongly_coupled_pair_sits_at_midpoint() {
        let p = ModelParams::new(2, 1.0, 0.0, 1e4).unwrap();
        let d = DisorderRealization {
            w: vec![-0.3, 0.4],
            seed: 0,
            index: 0,
        };
        let dec = diagonalize_arrowhead(&d, &p).unwrap();
        let dev = dark_state_deviation(&dec, &d, &p).unwrap();
        assert_eq!(dev.len(), 1);
        assert!(dev[0].delta.abs() < 1e-6);
    }

    #[test]
    fn decoupled_levels_sit_half_a_spacing_below_midpoint() {
        let p = ModelParams::new(20, 5.0, 0.0, 0.0).unwrap();
        let d = sample_disorder(&p, 3, 0);
        let dec = diagonalize_arrowhead(&d, &p).unwrap();
        let dev = dark_state_deviation(&dec, &d, &p).unwrap();
        assert_eq!(dev.len(), 18);
        for x in dev {
            assert!((x.delta + 20.0 * 0.5 * x.spacing).abs() < 1e-12);
        }
    }

    #[test]
    fn interlacing_bounds_deviation() {
        let p = ModelParams::new(300, 40.0, 0.0, 30.0).unwrap();
        for idx in 0..5 {
            let d = sample_disorder(&p, 9, idx);
            let dec = diagonalize_arrowhead(&d, &p).unwrap();
            for x in dark_state_deviation(&dec, &d, &p).unwrap() {
                assert!(x.delta.abs() <= 300.0 * 0.5 * x.spacing * (1.0 + 1e-12));
            }
        }
    }
}
