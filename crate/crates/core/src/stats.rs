//! Observables of window samples and clan statistics.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::sampler::{ClanSummary, WindowSample};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// Mean of `sigma(x) - x` with a batch-means standard error per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanJump {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: usize,
    pub batches: usize,
}

impl MeanJump {
    /// Whether every coordinate is within `k` standard errors of `target`.
    /// A zero standard error demands exact equality.
    pub fn within(&self, target: &[f64], k: f64) -> bool {
        self.mean
            .iter()
            .zip(&self.std_error)
            .zip(target)
            .all(|((m, s), t)| (m - t).abs() <= k * s)
    }
}

/// Averages the jump over window sites in each sample, then over samples.
/// Batches of consecutive samples give the standard error.
pub fn mean_jump(samples: &[WindowSample]) -> Result<MeanJump, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let dim = samples[0].window.sites()[0].dim();
    let per_sample: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let sites = s.window.sites();
            let mut acc = vec![0.0; dim];
            for x in &sites {
                let j = s.jump(x);
                for (a, c) in acc.iter_mut().zip(j.coords()) {
                    *a += *c as f64;
                }
            }
            acc.iter().map(|a| a / sites.len() as f64).collect()
        })
        .collect();
    let n = per_sample.len();
    let batches = ((n as f64).sqrt() as usize).clamp(2, n);
    let size = n / batches;
    let mut mean = vec![0.0; dim];
    let mut std_error = vec![0.0; dim];
    for k in 0..dim {
        mean[k] = per_sample.iter().map(|v| v[k]).sum::<f64>() / n as f64;
        let bm: Vec<f64> = (0..batches)
            .map(|b| {
                per_sample[b * size..(b + 1) * size]
                    .iter()
                    .map(|v| v[k])
                    .sum::<f64>()
                    / size as f64
            })
            .collect();
        let m = bm.iter().sum::<f64>() / batches as f64;
        let var = bm.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
        std_error[k] = (var / batches as f64).sqrt();
    }
    Ok(MeanJump {
        mean,
        std_error,
        samples: n,
        batches,
    })
}

/// Counts of window sites by the length of the cycle through them; fixed
/// points have length 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CycleLengthHistogram {
    pub counts: BTreeMap<usize, u64>,
}

impl CycleLengthHistogram {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn fraction_non_fixed(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let fixed = self.counts.get(&1).copied().unwrap_or(0);
        (total - fixed) as f64 / total as f64
    }
}

pub fn cycle_length_histogram(samples: &[WindowSample]) -> CycleLengthHistogram {
    let mut h = CycleLengthHistogram::default();
    for s in samples {
        for x in s.window.sites() {
            *h.counts.entry(s.permutation.cycle_length_at(&x)).or_default() += 1;
        }
    }
    h
}

/// `E[size of generation n+1] / E[size of generation n]` with a
/// delta-method standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationRatio {
    pub generation: usize,
    pub ratio: f64,
    pub sigma: f64,
    /// Total count in generation `n` over all clans.
    pub denominator_total: f64,
}

/// Ratios of mean generation sizes (`masses = false`) or mean generation
/// masses (`masses = true`) over independent clans, for every `n` whose
/// generation holds at least `min_total` in total.
pub fn generation_ratios(clans: &[ClanSummary], masses: bool, min_total: f64) -> Vec<GenerationRatio> {
    let n = clans.len() as f64;
    let get = |c: &ClanSummary, g: usize| -> f64 {
        let v = if masses {
            &c.generation_masses
        } else {
            &c.generation_sizes
        };
        v.get(g).map_or(0.0, |&x| x as f64)
    };
    let depth = clans.iter().map(|c| c.generation_sizes.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for g in 0..depth {
        let xs: Vec<f64> = clans.iter().map(|c| get(c, g)).collect();
        let ys: Vec<f64> = clans.iter().map(|c| get(c, g + 1)).collect();
        let total: f64 = xs.iter().sum();
        if total < min_total || n < 2.0 {
            continue;
        }
        let mx = total / n;
        let my = ys.iter().sum::<f64>() / n;
        let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / (n - 1.0);
        let cxy = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0);
        let r = my / mx;
        let var = (vy - 2.0 * r * cxy + r * r * vx) / (mx * mx * n);
        out.push(GenerationRatio {
            generation: g,
            ratio: r,
            sigma: var.max(0.0).sqrt(),
            denominator_total: total,
        });
    }
    out
}
