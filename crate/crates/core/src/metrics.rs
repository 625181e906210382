//! Monte Carlo functionals over the joint posterior of two independent
//! groups: chance to beat, expected loss, mean difference and quantile
//! difference curves.
//!
//! Draws are generated in fixed-size chunks, each from its own generator
//! stream derived from the configured seed, so serial and parallel runs give
//! bit-identical per-draw values. Draw `j` of group A is always paired with
//! draw `j` of group B.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::{check_tau, dot, quantile_indices, DirichletPosterior, ValueMap};
use crate::rng::stream_rng;
use crate::stats::{self, check_level};

pub const DEFAULT_DRAWS: usize = 100_000;
pub const DEFAULT_GAMMA: f64 = 0.99;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDrawConfig {
    pub n_draws: usize,
    pub seed: u64,
    /// Level of the equal-tailed credible intervals.
    pub gamma: f64,
}

impl Default for JointDrawConfig {
    fn default() -> Self {
        Self {
            n_draws: DEFAULT_DRAWS,
            seed: 0,
            gamma: DEFAULT_GAMMA,
        }
    }
}

impl JointDrawConfig {
    pub fn new(n_draws: usize, seed: u64) -> Self {
        Self {
            n_draws,
            seed,
            ..Self::default()
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
        }
        check_level(self.gamma)
    }
}

/// Summary of a per-draw functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub gamma: f64,
    pub n_draws: usize,
}

impl MetricResult {
    /// Mean, standard error (sample sd / sqrt(N)) and equal-tailed interval
    /// of per-draw values.
    pub fn from_values(values: &[f64], gamma: f64) -> Result<Self> {
        let (ci_lo, ci_hi) = credible_interval(values, gamma)?;
        Ok(Self {
            estimate: stats::mean(values),
            std_error: stats::std_error(values),
            ci_lo,
            ci_hi,
            gamma,
            n_draws: values.len(),
        })
    }

    pub fn range(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_lo <= value && value <= self.ci_hi
    }
}

/// Equal-tailed empirical interval at level `gamma`, linear interpolation
/// between order statistics.
pub fn credible_interval(values: &[f64], gamma: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    check_level(gamma)?;
    let sorted = stats::sorted_copy(values);
    let tail = (1.0 - gamma) / 2.0;
    Ok((
        stats::quantile_sorted(&sorted, tail),
        stats::quantile_sorted(&sorted, 1.0 - tail),
    ))
}

/// Applies `f` to `n_draws` paired draws, returning per-draw outputs in draw
/// order.
fn paired_map<T, F>(
    a: &DirichletPosterior,
    b: &DirichletPosterior,
    cfg: &JointDrawConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &[f64], &[f64]) -> Result<T> + Sync,
{
    cfg.validate()?;
    let sa = a.sampler();
    let sb = b.sampler();
    let n = cfg.n_draws;
    let chunks = n.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(cfg.seed, c as u64);
            let mut xa = vec![0.0; sa.dim()];
            let mut xb = vec![0.0; sb.dim()];
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            (start..end)
                .map(|j| {
                    sa.fill(&mut rng, &mut xa);
                    sb.fill(&mut rng, &mut xb);
                    f(j, &xa, &xb)
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Monte Carlo expectation of `w(x_A, x_B, v_A, v_B)` over paired draws.
///
/// Failures from `w` are wrapped with the index of the draw that produced them.
pub fn expect_functional<W>(
    post_a: &DirichletPosterior,
    post_b: &DirichletPosterior,
    w: W,
    cfg: &JointDrawConfig,
) -> Result<MetricResult>
where
    W: Fn(&[f64], &[f64], &ValueMap, &ValueMap) -> Result<f64> + Sync,
{
    let va = post_a.values();
    let vb = post_b.values();
    let values = paired_map(post_a, post_b, cfg, |j, xa, xb| {
        w(xa, xb, va, vb).map_err(|e| Error::Functional {
            draw: j,
            source: Box::new(e),
        })
    })?;
    MetricResult::from_values(&values, cfg.gamma)
}

#[inline]
fn beats(e: f64, c: f64) -> f64 {
    if e > c {
        1.0
    } else {
        0.0
    }
}

/// Loss of choosing the first group: `(second - first)` when the second is larger.
#[inline]
fn shortfall(chosen: f64, other: f64) -> f64 {
    if chosen < other {
        other - chosen
    } else {
        0.0
    }
}

/// `Pr(mean_E > mean_C)` under the joint posterior. Ties count as losses.
pub fn chance_to_beat(
    post_e: &DirichletPosterior,
    post_c: &DirichletPosterior,
    cfg: &JointDrawConfig,
) -> Result<MetricResult> {
    expect_functional(
        post_e,
        post_c,
        |xe, xc, ve, vc| Ok(beats(dot(xe, ve.values()), dot(xc, vc.values()))),
        cfg,
    )
}

/// Expected loss of shipping E: `E[(mean_C - mean_E)+]`.
pub fn expected_loss_choose_e(
    post_e: &DirichletPosterior,
    post_c: &DirichletPosterior,
    cfg: &JointDrawConfig,
) -> Result<MetricResult> {
    expect_functional(
        post_e,
        post_c,
        |xe, xc, ve, vc| Ok(shortfall(dot(xe, ve.values()), dot(xc, vc.values()))),
        cfg,
    )
}

/// Expected loss of keeping C: `E[(mean_E - mean_C)+]`.
pub fn expected_loss_choose_c(
    post_e: &DirichletPosterior,
    post_c: &DirichletPosterior,
    cfg: &JointDrawConfig,
) -> Result<MetricResult> {
    expect_functional(
        post_e,
        post_c,
        |xe, xc, ve, vc| Ok(shortfall(dot(xc, vc.values()), dot(xe, ve.values()))),
        cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub tau: f64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Quantile difference `Q_E(tau) - Q_C(tau)` per tau with pointwise
/// equal-tailed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub gamma: f64,
    pub n_draws: usize,
    pub rows: Vec<QuantileRow>,
}

impl QuantileCurve {
    pub fn taus(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tau).collect()
    }
}

pub(crate) fn check_taus(taus: &[f64]) -> Result<()> {
    for &t in taus {
        check_tau(t)?;
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "quantile levels must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One paired draw set with every per-draw quantity the report needs, so
/// that all metrics derived from it are mutually consistent.
#[derive(Debug, Clone)]
pub struct JointDraws {
    gamma: f64,
    mean_e: Vec<f64>,
    mean_c: Vec<f64>,
    taus: Vec<f64>,
    /// `delta_q[t][j]` for tau index `t`, draw `j`.
    delta_q: Vec<Vec<f64>>,
}

impl JointDraws {
    pub fn sample(
        post_e: &DirichletPosterior,
        post_c: &DirichletPosterior,
        taus: &[f64],
        cfg: &JointDrawConfig,
    ) -> Result<Self> {
        check_taus(taus)?;
        let ve = post_e.values().values();
        let vc = post_c.values().values();
        let t = taus.len();
        let per_draw = paired_map(post_e, post_c, cfg, |_, xe, xc| {
            let mut dq = Vec::with_capacity(t);
            if t > 0 {
                let mut ie = vec![0usize; t];
                let mut ic = vec![0usize; t];
                quantile_indices(xe, taus, &mut ie);
                quantile_indices(xc, taus, &mut ic);
                dq.extend(ie.iter().zip(&ic).map(|(&a, &b)| ve[a] - vc[b]));
            }
            Ok((dot(xe, ve), dot(xc, vc), dq))
        })?;

        let n = per_draw.len();
        let mut mean_e = Vec::with_capacity(n);
        let mut mean_c = Vec::with_capacity(n);
        let mut delta_q = vec![Vec::with_capacity(n); t];
        for (e, c, dq) in per_draw {
            mean_e.push(e);
            mean_c.push(c);
            for (col, v) in delta_q.iter_mut().zip(dq) {
                col.push(v);
            }
        }
        Ok(Self {
            gamma: cfg.gamma,
            mean_e,
            mean_c,
            taus: taus.to_vec(),
            delta_q,
        })
    }

    pub fn len(&self) -> usize {
        self.mean_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_e.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Per-draw weighted means of group E.
    pub fn means_e(&self) -> &[f64] {
        &self.mean_e
    }

    pub fn means_c(&self) -> &[f64] {
        &self.mean_c
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// Per-draw quantile differences at tau index `t`.
    pub fn delta_q(&self, t: usize) -> &[f64] {
        &self.delta_q[t]
    }

    fn summarize(&self, f: impl Fn(f64, f64) -> f64) -> MetricResult {
        let v: Vec<f64> = self
            .mean_e
            .iter()
            .zip(&self.mean_c)
            .map(|(&e, &c)| f(e, c))
            .collect();
        MetricResult::from_values(&v, self.gamma).expect("non-empty draws, validated level")
    }

    /// `mean_E - mean_C` per draw.
    pub fn mean_diff(&self) -> MetricResult {
        self.summarize(|e, c| e - c)
    }

    pub fn chance_to_beat(&self) -> MetricResult {
        self.summarize(beats)
    }

    /// `Pr(mean_C > mean_E)` on the same draws.
    pub fn chance_control_beats(&self) -> MetricResult {
        self.summarize(|e, c| beats(c, e))
    }

    /// Fraction of draws where the two means are exactly equal.
    pub fn tie_fraction(&self) -> f64 {
        let ties = self
            .mean_e
            .iter()
            .zip(&self.mean_c)
            .filter(|(e, c)| e == c)
            .count();
        ties as f64 / self.len() as f64
    }

    pub fn expected_loss_e(&self) -> MetricResult {
        self.summarize(shortfall)
    }

    pub fn expected_loss_c(&self) -> MetricResult {
        self.summarize(|e, c| shortfall(c, e))
    }

    pub fn quantile_result(&self, t: usize) -> MetricResult {
        MetricResult::from_values(&self.delta_q[t], self.gamma)
            .expect("non-empty draws, validated level")
    }

    pub fn quantile_curve(&self) -> QuantileCurve {
        let rows = self
            .taus
            .iter()
            .enumerate()
            .map(|(t, &tau)| {
                let r = self.quantile_result(t);
                QuantileRow {
                    tau,
                    mean: r.estimate,
                    ci_lo: r.ci_lo,
                    ci_hi: r.ci_hi,
                }
            })
            .collect();
        QuantileCurve {
            gamma: self.gamma,
            n_draws: self.len(),
            rows,
        }
    }
}

/// Quantile-difference curve from a single pass over `cfg.n_draws` paired draws.
pub fn delta_quantile_curve(
    post_e: &DirichletPosterior,
    post_c: &DirichletPosterior,
    taus: &[f64],
    cfg: &JointDrawConfig,
) -> Result<QuantileCurve> {
    Ok(JointDraws::sample(post_e, post_c, taus, cfg)?.quantile_curve())
}
