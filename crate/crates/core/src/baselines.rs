//! Benchmark estimators: a CLT-Normal model of the mean difference and the
//! classical (resample-with-replacement) bootstrap.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_taus, credible_interval, MetricResult};
use crate::rng::{stream_rng, SimRng};
use crate::stats::{self, normal_cdf, normal_pdf, two_sided_z};

/// Normal sampling distribution of `mean(E) - mean(C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMeanDiff {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalMeanDiff {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(Error::DegenerateVariance);
        }
        Ok(Self { mu, sigma })
    }

    /// Sampling distribution implied by population moments and group sizes.
    pub fn from_moments(
        mean_e: f64,
        var_e: f64,
        n_e: usize,
        mean_c: f64,
        var_c: f64,
        n_c: usize,
    ) -> Result<Self> {
        let sigma = (var_e / n_e as f64 + var_c / n_c as f64).sqrt();
        Self::new(mean_e - mean_c, sigma)
    }

    /// Group E and C swapped.
    pub fn swapped(&self) -> Self {
        Self {
            mu: -self.mu,
            sigma: self.sigma,
        }
    }

    pub fn interval(&self, gamma: f64) -> Result<(f64, f64)> {
        let z = two_sided_z(gamma)?;
        Ok((self.mu - z * self.sigma, self.mu + z * self.sigma))
    }
}

/// Sample means and unbiased variances of both groups.
pub fn normal_fit(data_e: &[f64], data_c: &[f64]) -> Result<NormalMeanDiff> {
    for d in [data_e, data_c] {
        if d.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                found: d.len(),
            });
        }
    }
    NormalMeanDiff::from_moments(
        stats::mean(data_e),
        stats::sample_variance(data_e),
        data_e.len(),
        stats::mean(data_c),
        stats::sample_variance(data_c),
        data_c.len(),
    )
}

/// `Pr(D > 0) = Phi(mu / sigma)`.
pub fn normal_chance_to_beat(m: &NormalMeanDiff) -> Result<f64> {
    let m = NormalMeanDiff::new(m.mu, m.sigma)?;
    Ok(normal_cdf(m.mu / m.sigma))
}

/// `E[(-D)+] = sigma * phi(mu / sigma) - mu * Phi(-mu / sigma)`.
pub fn normal_expected_loss_choose_e(m: &NormalMeanDiff) -> Result<f64> {
    let m = NormalMeanDiff::new(m.mu, m.sigma)?;
    let z = m.mu / m.sigma;
    Ok((m.sigma * normal_pdf(z) - m.mu * normal_cdf(-z)).max(0.0))
}

/// `E[D+]`, the mirror of [`normal_expected_loss_choose_e`].
pub fn normal_expected_loss_choose_c(m: &NormalMeanDiff) -> Result<f64> {
    normal_expected_loss_choose_e(&m.swapped())
}

pub const DEFAULT_RESAMPLES: usize = 10_000;

const REPLICATES_PER_STREAM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn new(n_resamples: usize, seed: u64) -> Self {
        Self { n_resamples, seed }
    }
}

/// A resample is represented by multiplicities over the sorted data, which
/// gives means and order statistics in one linear scan without sorting.
struct Resampler {
    sorted: Vec<f64>,
}

impl Resampler {
    fn new(data: &[f64]) -> Self {
        Self {
            sorted: stats::sorted_copy(data),
        }
    }

    fn draw(&self, rng: &mut SimRng, counts: &mut [u32]) {
        counts.fill(0);
        let n = self.sorted.len();
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
    }

    fn mean(&self, counts: &[u32]) -> f64 {
        let s: f64 = self
            .sorted
            .iter()
            .zip(counts)
            .map(|(v, &c)| v * c as f64)
            .sum();
        s / self.sorted.len() as f64
    }

    /// Linear-interpolation quantiles of the resample; `taus` increasing.
    fn quantiles(&self, counts: &[u32], taus: &[f64], out: &mut [f64]) {
        let n = self.sorted.len();
        let mut idx = 0usize;
        // Number of resampled values at sorted positions < idx.
        let mut below = 0usize;
        let mut value_at = |pos: usize| -> f64 {
            while below + counts[idx] as usize <= pos {
                below += counts[idx] as usize;
                idx += 1;
            }
            self.sorted[idx]
        };
        for (t, slot) in taus.iter().zip(out.iter_mut()) {
            let h = (n - 1) as f64 * t;
            let lo = h.floor() as usize;
            let frac = h - lo as f64;
            let a = value_at(lo);
            *slot = if lo + 1 < n && frac > 0.0 {
                let b = value_at(lo + 1);
                a + frac * (b - a)
            } else {
                a
            };
        }
    }
}

/// Bootstrap replicates of the mean difference and (optionally) quantile
/// differences, all taken from the same resamples.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReplicates {
    pub mean_diff: Vec<f64>,
    pub taus: Vec<f64>,
    /// `quantile_diff[t][r]` for tau index `t`, replicate `r`.
    pub quantile_diff: Vec<Vec<f64>>,
}

pub fn bootstrap_replicates(
    data_e: &[f64],
    data_c: &[f64],
    taus: &[f64],
    cfg: &BootstrapConfig,
) -> Result<BootstrapReplicates> {
    if data_e.is_empty() || data_c.is_empty() {
        return Err(Error::EmptyData);
    }
    if cfg.n_resamples == 0 {
        return Err(Error::InvalidArgument(
            "n_resamples must be at least 1".into(),
        ));
    }
    check_taus(taus)?;
    let re = Resampler::new(data_e);
    let rc = Resampler::new(data_c);
    let t = taus.len();
    let streams = cfg.n_resamples.div_ceil(REPLICATES_PER_STREAM);

    let parts: Vec<Vec<(f64, Vec<f64>)>> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(cfg.seed, s as u64);
            let mut ce = vec![0u32; re.sorted.len()];
            let mut cc = vec![0u32; rc.sorted.len()];
            let mut qe = vec![0.0; t];
            let mut qc = vec![0.0; t];
            let start = s * REPLICATES_PER_STREAM;
            let end = (start + REPLICATES_PER_STREAM).min(cfg.n_resamples);
            (start..end)
                .map(|_| {
                    re.draw(&mut rng, &mut ce);
                    rc.draw(&mut rng, &mut cc);
                    let md = re.mean(&ce) - rc.mean(&cc);
                    let mut dq = Vec::with_capacity(t);
                    if t > 0 {
                        re.quantiles(&ce, taus, &mut qe);
                        rc.quantiles(&cc, taus, &mut qc);
                        dq.extend(qe.iter().zip(&qc).map(|(a, b)| a - b));
                    }
                    (md, dq)
                })
                .collect()
        })
        .collect();

    let mut mean_diff = Vec::with_capacity(cfg.n_resamples);
    let mut quantile_diff = vec![Vec::with_capacity(cfg.n_resamples); t];
    for (md, dq) in parts.into_iter().flatten() {
        mean_diff.push(md);
        for (col, v) in quantile_diff.iter_mut().zip(dq) {
            col.push(v);
        }
    }
    Ok(BootstrapReplicates {
        mean_diff,
        taus: taus.to_vec(),
        quantile_diff,
    })
}

/// Replicates of `mean(E*) - mean(C*)`.
pub fn bootstrap_mean_diff(
    data_e: &[f64],
    data_c: &[f64],
    cfg: &BootstrapConfig,
) -> Result<Vec<f64>> {
    Ok(bootstrap_replicates(data_e, data_c, &[], cfg)?.mean_diff)
}

/// Replicates of `Q*_E(tau) - Q*_C(tau)`, one vector per tau.
pub fn bootstrap_quantile_diff(
    data_e: &[f64],
    data_c: &[f64],
    taus: &[f64],
    cfg: &BootstrapConfig,
) -> Result<Vec<Vec<f64>>> {
    Ok(bootstrap_replicates(data_e, data_c, taus, cfg)?.quantile_diff)
}

/// Decision metrics read off bootstrap replicates of the mean difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean_diff: MetricResult,
    pub chance_to_beat: f64,
    pub expected_loss_e: f64,
    pub expected_loss_c: f64,
}

pub fn summarize_mean_diff(replicates: &[f64], gamma: f64) -> Result<BootstrapSummary> {
    let mean_diff = MetricResult::from_values(replicates, gamma)?;
    let n = replicates.len() as f64;
    let wins = replicates.iter().filter(|&&d| d > 0.0).count() as f64;
    let loss_e = replicates.iter().map(|&d| (-d).max(0.0)).sum::<f64>() / n;
    let loss_c = replicates.iter().map(|&d| d.max(0.0)).sum::<f64>() / n;
    Ok(BootstrapSummary {
        mean_diff,
        chance_to_beat: wins / n,
        expected_loss_e: loss_e,
        expected_loss_c: loss_c,
    })
}

/// Percentile interval of bootstrap replicates.
pub fn bootstrap_interval(replicates: &[f64], gamma: f64) -> Result<(f64, f64)> {
    credible_interval(replicates, gamma)
}
