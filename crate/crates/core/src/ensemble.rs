//! Disorder averaging: deterministic per-realization seeding, parallel
//! execution and aggregation in realization-index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Samples below this are left out of geometric means (and counted).
pub const GEO_FLOOR: f64 = 1e-300;

/// One realization that raised an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationFailure {
    pub seed: u64,
    pub index: u64,
    pub message: String,
}

/// Per-realization results in index order plus the failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun<R> {
    pub seed: u64,
    pub requested: u64,
    /// `(index, record)` for every successful realization, ascending in index.
    pub records: Vec<(u64, R)>,
    pub failures: Vec<RealizationFailure>,
}

impl<R> EnsembleRun<R> {
    pub fn values(&self) -> impl Iterator<Item = &R> {
        self.records.iter().map(|(_, r)| r)
    }

    /// Error naming the first failing realization, if any failed.
    pub fn first_failure(&self) -> Result<()> {
        match self.failures.first() {
            None => Ok(()),
            Some(f) => Err(Error::Computation(format!(
                "{} of {} realizations failed; first: seed {} index {}: {}",
                self.failures.len(),
                self.requested,
                f.seed,
                f.index,
                f.message
            ))),
        }
    }
}

/// Runs `job(seed, index)` for `index in 0..realizations`.
///
/// With `threads = Some(t)` a dedicated pool of `t` workers is used, otherwise
/// the global rayon pool. Results do not depend on the schedule.
pub fn run_ensemble<R, F>(seed: u64, realizations: u64, threads: Option<usize>, job: F) -> Result<EnsembleRun<R>>
where
    R: Send,
    F: Fn(u64, u64) -> Result<R> + Sync,
{
    let work = || -> Vec<(u64, Result<R>)> {
        (0..realizations)
            .into_par_iter()
            .map(|k| (k, job(seed, k)))
            .collect()
    };
    let outcomes = match threads {
        Some(0) => return usage("thread count must be positive"),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Computation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut run = EnsembleRun {
        seed,
        requested: realizations,
        records: Vec::with_capacity(outcomes.len()),
        failures: Vec::new(),
    };
    for (index, outcome) in outcomes {
        match outcome {
            Ok(r) => run.records.push((index, r)),
            Err(e) => run.failures.push(RealizationFailure {
                seed,
                index,
                message: e.to_string(),
            }),
        }
    }
    Ok(run)
}

/// Aggregate of one scalar observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Absent when any sample is ≤ 0 or every sample is below [`GEO_FLOOR`].
    pub geo_mean: Option<f64>,
    /// Positive samples below [`GEO_FLOOR`] left out of `geo_mean`.
    pub geo_excluded: usize,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation over `√count`; zero for a single sample.
    pub sem: f64,
    pub count: usize,
}

impl EnsembleStats {
    /// Aggregates samples in the given order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return usage("statistics of an empty sample");
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::Computation(format!("non-finite sample {bad}")));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let (min, max) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut geo_excluded = 0;
        let mut log_sum = 0.0;
        let mut used = 0usize;
        let all_positive = samples.iter().all(|&x| x > 0.0);
        if all_positive {
            for &x in samples {
                if x < GEO_FLOOR {
                    geo_excluded += 1;
                } else {
                    log_sum += x.ln();
                    used += 1;
                }
            }
        }
        let geo_mean = (all_positive && used > 0).then(|| (log_sum / used as f64).exp());
        Ok(Self {
            // Rounding can push the mean of identical samples a ulp outside [min, max].
            mean: mean.clamp(min, max),
            geo_mean,
            geo_excluded,
            min,
            max,
            sem: (var / n).sqrt(),
            count: samples.len(),
        })
    }
}

/// Bin index of `ε` for half-open bins `[k·w, (k+1)·w)` anchored at zero.
///
/// Values within `1e-9` bin widths of an edge are snapped onto it, so that
/// `ε = 0.5` lands in `[0.50, 0.52)` despite `0.5/0.02` rounding below 25.
pub fn bin_index(epsilon: f64, width: f64) -> i64 {
    let q = epsilon / width;
    let r = q.round();
    if (q - r).abs() < 1e-9 {
        r as i64
    } else {
        q.floor() as i64
    }
}

/// Cross-realization average of one energy bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean over realizations of the per-realization bin mean.
    pub mean: f64,
    pub sem: f64,
    /// Realizations with at least one state in the bin.
    pub realizations: usize,
    pub states: usize,
}

/// Bins `(ε, value)` pairs of each realization, averages within the
/// realization, then across realizations. Empty bins are omitted.
pub fn bin_by_energy(records: &[Vec<(f64, f64)>], width: f64) -> Result<Vec<EnergyBin>> {
    if !(width > 0.0) || !width.is_finite() {
        return usage(format!("bin width must be positive, got {width}"));
    }
    use std::collections::BTreeMap;
    let mut per_bin: BTreeMap<i64, (Vec<f64>, usize)> = BTreeMap::new();
    for realization in records {
        let mut local: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
        for &(eps, value) in realization {
            let e = local.entry(bin_index(eps, width)).or_insert((0.0, 0));
            e.0 += value;
            e.1 += 1;
        }
        for (k, (sum, count)) in local {
            let e = per_bin.entry(k).or_default();
            e.0.push(sum / count as f64);
            e.1 += count;
        }
    }
    per_bin
        .into_iter()
        .map(|(k, (means, states))| {
            let s = EnsembleStats::from_samples(&means)?;
            Ok(EnergyBin {
                lo: k as f64 * width,
                hi: (k + 1) as f64 * width,
                mean: s.mean,
                sem: s.sem,
                realizations: s.count,
                states,
            })
        })
        .collect()
}
