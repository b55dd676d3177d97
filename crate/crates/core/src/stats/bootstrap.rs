//! Bootstrap resampling of effect sizes.
//!
//! Resample `r` draws from its own ChaCha stream (`stream = r`, shared key
//! derived from the seed), so the effect samples are identical whether the
//! resamples run on one thread or many.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{
    significance, Characteristic, DiffDistribution, EffectReport, GroupComparison, StatsError,
};

pub const DEFAULT_RESAMPLES: usize = 1_000_000;
pub const MIN_RESAMPLES: usize = 1_000;

const CHUNK: usize = 4096;

/// What a resample draws with replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    /// Trees within each group; pair deltas are recomputed from the drawn
    /// trees. Accounts for pair values that share a tree.
    #[default]
    Trees,
    /// Individual pair-difference values from the within and across lists,
    /// independently.
    PairValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    #[default]
    Percentile,
    Bca,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub seed: u64,
    pub method: CiMethod,
    /// Worker threads; `None` uses the global pool, `Some(1)` runs inline.
    pub threads: Option<usize>,
}

impl BootstrapConfig {
    pub fn new(n_resamples: usize, seed: u64) -> Self {
        BootstrapConfig {
            n_resamples,
            seed,
            method: CiMethod::Percentile,
            threads: None,
        }
    }

    pub fn with_method(mut self, method: CiMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    fn check(&self) -> Result<(), StatsError> {
        if self.n_resamples < MIN_RESAMPLES {
            return Err(StatsError::TooFewResamples(self.n_resamples));
        }
        Ok(())
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig::new(DEFAULT_RESAMPLES, 0)
    }
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One (within mean, across mean) pair per resample, in resample order.
fn resample<F>(cfg: &BootstrapConfig, draw: F) -> Vec<(f64, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync,
{
    let key = ChaCha8Rng::seed_from_u64(cfg.seed).get_seed();
    let mut out = vec![(0.0, 0.0); cfg.n_resamples];
    let fill = |(c, chunk): (usize, &mut [(f64, f64)])| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream((c * CHUNK + k) as u64);
            *slot = draw(&mut rng);
        }
    };
    match cfg.threads {
        Some(1) => out.chunks_mut(CHUNK).enumerate().for_each(fill),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("bootstrap thread pool")
            .install(|| out.par_chunks_mut(CHUNK).enumerate().for_each(fill)),
        None => out.par_chunks_mut(CHUNK).enumerate().for_each(fill),
    }
    out
}

struct Summary {
    ci95: (f64, f64),
    ci99: (f64, f64),
    mean_effect: f64,
    within_ci95: (f64, f64),
    across_ci95: (f64, f64),
}

fn summarize(
    samples: &[(f64, f64)],
    observed: f64,
    jackknife: &[f64],
    method: CiMethod,
) -> Summary {
    let n = samples.len() as f64;
    let mut effects: Vec<f64> = samples.iter().map(|&(w, a)| a - w).collect();
    let mean_effect = effects.iter().sum::<f64>() / n;
    effects.sort_by(f64::total_cmp);
    let mut within: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut across: Vec<f64> = samples.iter().map(|s| s.1).collect();
    within.sort_by(f64::total_cmp);
    across.sort_by(f64::total_cmp);

    let interval = |level: f64| -> (f64, f64) {
        let tail = (1.0 - level) / 2.0;
        let (lo, hi) = match method {
            CiMethod::Percentile => (tail, 1.0 - tail),
            CiMethod::Bca => bca_levels(&effects, observed, jackknife, tail),
        };
        (percentile(&effects, lo), percentile(&effects, hi))
    };
    Summary {
        ci95: interval(0.95),
        ci99: interval(0.99),
        mean_effect,
        within_ci95: (percentile(&within, 0.025), percentile(&within, 0.975)),
        across_ci95: (percentile(&across, 0.025), percentile(&across, 0.975)),
    }
}

/// Bias-corrected and accelerated quantile levels for a two-sided interval
/// with `tail` mass on each side. Falls back to percentile levels when the
/// bootstrap distribution is degenerate.
fn bca_levels(sorted: &[f64], observed: f64, jackknife: &[f64], tail: f64) -> (f64, f64) {
    let plain = (tail, 1.0 - tail);
    let b = sorted.len() as f64;
    if sorted.first() == sorted.last() {
        return plain;
    }
    let below = sorted.partition_point(|&x| x < observed) as f64;
    let ties = sorted.partition_point(|&x| x <= observed) as f64 - below;
    let prop = ((below + 0.5 * ties) / b).clamp(1.0 / (b + 1.0), b / (b + 1.0));
    let normal = Normal::standard();
    let z0 = normal.inverse_cdf(prop);

    let jbar = mean(jackknife);
    let (num, den) = jackknife.iter().fold((0.0, 0.0), |(n3, d2), &t| {
        let d = jbar - t;
        (n3 + d * d * d, d2 + d * d)
    });
    let accel = if den > 0.0 {
        num / (6.0 * den.powf(1.5))
    } else {
        0.0
    };

    let adjust = |alpha: f64| {
        let z = normal.inverse_cdf(alpha);
        let shifted = z0 + (z0 + z) / (1.0 - accel * (z0 + z));
        if shifted.is_finite() {
            normal.cdf(shifted)
        } else {
            alpha
        }
    };
    (adjust(tail), adjust(1.0 - tail))
}

fn report(
    ch: Characteristic,
    mean_within: f64,
    mean_across: f64,
    summary: Summary,
    cfg: &BootstrapConfig,
    resampling: Resampling,
) -> EffectReport {
    EffectReport {
        characteristic: ch,
        mean_within,
        mean_across,
        mean_effect: summary.mean_effect,
        significant95: significance(summary.ci95.0, summary.ci95.1).expect("ordered quantiles"),
        significant99: significance(summary.ci99.0, summary.ci99.1).expect("ordered quantiles"),
        ci95: summary.ci95,
        ci99: summary.ci99,
        within_ci95: summary.within_ci95,
        across_ci95: summary.across_ci95,
        n_resamples: cfg.n_resamples,
        resampling,
        method: cfg.method,
    }
}

/// Bootstraps `mean(across) - mean(within)` by drawing, in every resample,
/// each list's own length in values with replacement from that list,
/// independently.
pub fn bootstrap_effect(
    within: &DiffDistribution,
    across: &DiffDistribution,
    cfg: &BootstrapConfig,
) -> Result<EffectReport, StatsError> {
    cfg.check()?;
    if within.values.is_empty() || across.values.is_empty() {
        return Err(StatsError::EmptyDistribution);
    }
    if within.characteristic != across.characteristic {
        return Err(StatsError::CharacteristicMismatch);
    }
    let (w, a) = (&within.values, &across.values);
    let samples = resample(cfg, |rng| {
        let mw = (0..w.len())
            .map(|_| w[rng.random_range(0..w.len())])
            .sum::<f64>()
            / w.len() as f64;
        let ma = (0..a.len())
            .map(|_| a[rng.random_range(0..a.len())])
            .sum::<f64>()
            / a.len() as f64;
        (mw, ma)
    });
    let (mw, ma) = (mean(w), mean(a));
    let jackknife = if cfg.method == CiMethod::Bca {
        let (sw, sa) = (mw * w.len() as f64, ma * a.len() as f64);
        let loo = |sum: f64, x: f64, n: usize| {
            if n > 1 {
                (sum - x) / (n - 1) as f64
            } else {
                sum / n as f64
            }
        };
        w.iter()
            .map(|&x| ma - loo(sw, x, w.len()))
            .chain(a.iter().map(|&x| loo(sa, x, a.len()) - mw))
            .collect()
    } else {
        Vec::new()
    };
    let summary = summarize(&samples, ma - mw, &jackknife, cfg.method);
    Ok(report(
        within.characteristic,
        mw,
        ma,
        summary,
        cfg,
        Resampling::PairValues,
    ))
}

/// Within and across means for a subset of trees given by combined indices.
/// Within pairs are taken in draw order and skip pairs that drew the same tree.
fn tree_means(
    cmp: &GroupComparison,
    ia: &[usize],
    ib: &[usize],
    ch: Characteristic,
) -> Option<(f64, f64)> {
    let (mut ws, mut wn) = (0.0, 0usize);
    for group in [ia, ib] {
        for p in 0..group.len() {
            for q in p + 1..group.len() {
                if group[p] != group[q] {
                    ws += cmp.value(group[p], group[q], ch);
                    wn += 1;
                }
            }
        }
    }
    if wn == 0 || ia.is_empty() || ib.is_empty() {
        return None;
    }
    let mut across = 0.0;
    for &i in ia {
        for &j in ib {
            across += cmp.value(i, j, ch);
        }
    }
    Some((ws / wn as f64, across / (ia.len() * ib.len()) as f64))
}

/// Bootstraps the effect by resampling trees within each group and
/// recomputing both distributions from the drawn trees.
pub fn bootstrap_trees(
    cmp: &GroupComparison,
    ch: Characteristic,
    cfg: &BootstrapConfig,
) -> Result<EffectReport, StatsError> {
    cfg.check()?;
    let (n_a, n_b) = cmp.group_sizes();
    let all_a: Vec<usize> = (0..n_a).collect();
    let all_b: Vec<usize> = (n_a..n_a + n_b).collect();
    let (mw, ma) = tree_means(cmp, &all_a, &all_b, ch).ok_or(StatsError::EmptyDistribution)?;

    let samples = resample(cfg, |rng| {
        let mut ia = vec![0; n_a];
        let mut ib = vec![0; n_b];
        loop {
            ia.iter_mut().for_each(|x| *x = rng.random_range(0..n_a));
            ib.iter_mut()
                .for_each(|x| *x = n_a + rng.random_range(0..n_b));
            if let Some(m) = tree_means(cmp, &ia, &ib, ch) {
                return m;
            }
        }
    });

    let jackknife = if cfg.method == CiMethod::Bca {
        (0..n_a + n_b)
            .filter_map(|skip| {
                let ia: Vec<usize> = all_a.iter().copied().filter(|&i| i != skip).collect();
                let ib: Vec<usize> = all_b.iter().copied().filter(|&i| i != skip).collect();
                tree_means(cmp, &ia, &ib, ch).map(|(w, a)| a - w)
            })
            .collect()
    } else {
        Vec::new()
    };
    let summary = summarize(&samples, ma - mw, &jackknife, cfg.method);
    Ok(report(ch, mw, ma, summary, cfg, Resampling::Trees))
}
