use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{build_grid, sample_visitors, DEFAULT_RESOLUTION};
use super::hurdle::{random_hurdle, HurdleModel};
use super::truth::{ground_truth, TruthRecord};
use crate::baselines::{
    bootstrap_replicates, normal_chance_to_beat, normal_expected_loss_choose_c,
    normal_expected_loss_choose_e, normal_fit, summarize_mean_diff, BootstrapConfig,
    DEFAULT_RESAMPLES,
};
use crate::error::{Error, Result};
use crate::metrics::{check_taus, JointDrawConfig, JointDraws, MetricResult, DEFAULT_GAMMA};
use crate::posterior::{BinSpec, DirichletPosterior, OutOfRange, PriorVector};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::{check_level, quantile_sorted, sorted_copy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_sims: usize,
    pub bin_counts: Vec<usize>,
    pub taus: Vec<f64>,
    /// Joint posterior draws per Dirichlet estimator.
    pub draws: usize,
    pub resamples: usize,
    pub visitors_min: usize,
    pub visitors_max: usize,
    pub gamma: f64,
    pub master_seed: u64,
    pub resolution: usize,
    /// Both groups share one population and one sample (an A/A test).
    pub identical_groups: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_sims: 500,
            bin_counts: vec![8, 32, 128, 512],
            taus: vec![0.1, 0.5, 0.9],
            draws: 10_000,
            resamples: DEFAULT_RESAMPLES,
            visitors_min: 8_000,
            visitors_max: 25_000,
            gamma: DEFAULT_GAMMA,
            master_seed: 0,
            resolution: DEFAULT_RESOLUTION,
            identical_groups: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_counts.iter().any(|&k| k < 2) {
            return Err(Error::InvalidArgument(
                "bin counts must be at least 2".into(),
            ));
        }
        if self.draws == 0 || self.resamples == 0 {
            return Err(Error::InvalidArgument(
                "draws and resamples must be positive".into(),
            ));
        }
        if self.visitors_min < 2 || self.visitors_min > self.visitors_max {
            return Err(Error::InvalidArgument(format!(
                "visitor range {}..={} is empty or below 2",
                self.visitors_min, self.visitors_max
            )));
        }
        check_taus(&self.taus)?;
        check_level(self.gamma)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Normal,
    Bootstrap,
    Dirichlet,
    /// Plug-in sample statistics.
    Empirical,
    /// Sampling distribution at the true parameters.
    Truth,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Estimator::Normal => "normal",
            Estimator::Bootstrap => "bootstrap",
            Estimator::Dirichlet => "dirichlet",
            Estimator::Empirical => "empirical",
            Estimator::Truth => "truth",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    MeanDiff,
    ChanceToBeat,
    ExpectedLossE,
    ExpectedLossC,
    QuantileDiff,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Statistic::MeanDiff => "mean_diff",
            Statistic::ChanceToBeat => "chance_to_beat",
            Statistic::ExpectedLossE => "expected_loss_e",
            Statistic::ExpectedLossC => "expected_loss_c",
            Statistic::QuantileDiff => "quantile_diff",
        };
        f.write_str(s)
    }
}

/// One estimate of one statistic in one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub estimator: Estimator,
    pub bin_count: Option<usize>,
    pub tau: Option<f64>,
    pub statistic: Statistic,
    pub truth: f64,
    pub estimate: f64,
    /// Sample-based reference: the CLT value for mean and decision metrics,
    /// the empirical quantile difference for quantile rows.
    pub empirical: f64,
    pub ci: Option<(f64, f64)>,
}

impl EstimateRow {
    /// Truth minus estimate.
    pub fn offset(&self) -> f64 {
        self.truth - self.estimate
    }

    /// Sample-based reference minus estimate.
    pub fn empirical_offset(&self) -> f64 {
        self.empirical - self.estimate
    }

    pub fn covered(&self) -> Option<bool> {
        self.ci.map(|(lo, hi)| lo <= self.truth && self.truth <= hi)
    }

    pub fn ci_range(&self) -> Option<f64> {
        self.ci.map(|(lo, hi)| hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub sim_id: usize,
    pub seed: u64,
    /// Visitors per group.
    pub n_visitors: usize,
    pub model_e: HurdleModel,
    pub model_c: HurdleModel,
    pub truth: TruthRecord,
    pub rows: Vec<EstimateRow>,
}

impl SimulationRecord {
    pub fn find(
        &self,
        estimator: Estimator,
        bin_count: Option<usize>,
        statistic: Statistic,
        tau: Option<f64>,
    ) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| {
            r.estimator == estimator
                && r.bin_count == bin_count
                && r.statistic == statistic
                && r.tau == tau
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFailure {
    pub sim_id: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimOutcome {
    Completed(SimulationRecord),
    Failed(SimFailure),
}

/// The data of one simulated experiment before any estimator runs.
#[derive(Debug, Clone)]
pub struct SimulatedExperiment {
    pub seed: u64,
    pub model_e: HurdleModel,
    pub model_c: HurdleModel,
    pub truth: TruthRecord,
    pub data_e: Vec<f64>,
    pub data_c: Vec<f64>,
}

/// Generates populations, ground truth and visitor samples for one simulation.
/// Everything is a function of `(master_seed, sim_id)` alone.
pub fn simulate_experiment(config: &StudyConfig, sim_id: usize) -> Result<SimulatedExperiment> {
    let seed = derive_seed(config.master_seed, sim_id as u64);
    let mut rng = rng_from_seed(seed);
    let model_e = random_hurdle(&mut rng);
    let model_c = if config.identical_groups {
        model_e.clone()
    } else {
        random_hurdle(&mut rng)
    };
    let n = rng.random_range(config.visitors_min..=config.visitors_max);
    let grid_e = build_grid(&model_e, config.resolution)?;
    let grid_c = if config.identical_groups {
        grid_e.clone()
    } else {
        build_grid(&model_c, config.resolution)?
    };
    let truth = ground_truth(&grid_e, &grid_c, n, n, &config.taus)?;
    let data_e = sample_visitors(&grid_e, n, &mut rng);
    let data_c = if config.identical_groups {
        data_e.clone()
    } else {
        sample_visitors(&grid_c, n, &mut rng)
    };
    Ok(SimulatedExperiment {
        seed,
        model_e,
        model_c,
        truth,
        data_e,
        data_c,
    })
}

#[allow(clippy::too_many_arguments)]
fn row(
    estimator: Estimator,
    bin_count: Option<usize>,
    statistic: Statistic,
    tau: Option<f64>,
    truth: f64,
    estimate: f64,
    empirical: f64,
    ci: Option<(f64, f64)>,
) -> EstimateRow {
    EstimateRow {
        estimator,
        bin_count,
        tau,
        statistic,
        truth,
        estimate,
        empirical,
        ci,
    }
}

fn interval(m: &MetricResult) -> Option<(f64, f64)> {
    Some((m.ci_lo, m.ci_hi))
}

/// Runs every estimator on one simulated experiment.
pub fn evaluate(
    config: &StudyConfig,
    sim_id: usize,
    exp: SimulatedExperiment,
) -> Result<SimulationRecord> {
    let truth = &exp.truth;
    let taus = &config.taus;
    let mut rows = Vec::new();

    let normal = normal_fit(&exp.data_e, &exp.data_c)?;
    let clt = [
        (Statistic::MeanDiff, truth.mean_diff, normal.mu),
        (
            Statistic::ChanceToBeat,
            truth.chance_to_beat,
            normal_chance_to_beat(&normal)?,
        ),
        (
            Statistic::ExpectedLossE,
            truth.expected_loss_e,
            normal_expected_loss_choose_e(&normal)?,
        ),
        (
            Statistic::ExpectedLossC,
            truth.expected_loss_c,
            normal_expected_loss_choose_c(&normal)?,
        ),
    ];
    let normal_ci = normal.interval(config.gamma)?;
    for &(stat, t, est) in &clt {
        let ci = (stat == Statistic::MeanDiff).then_some(normal_ci);
        rows.push(row(Estimator::Normal, None, stat, None, t, est, est, ci));
    }

    let sorted_e = sorted_copy(&exp.data_e);
    let sorted_c = sorted_copy(&exp.data_c);
    let empirical_dq: Vec<f64> = taus
        .iter()
        .map(|&t| quantile_sorted(&sorted_e, t) - quantile_sorted(&sorted_c, t))
        .collect();
    rows.push(row(
        Estimator::Empirical,
        None,
        Statistic::MeanDiff,
        None,
        truth.mean_diff,
        normal.mu,
        normal.mu,
        None,
    ));
    for (i, &t) in taus.iter().enumerate() {
        rows.push(row(
            Estimator::Empirical,
            None,
            Statistic::QuantileDiff,
            Some(t),
            truth.delta_q[i],
            empirical_dq[i],
            empirical_dq[i],
            None,
        ));
    }
    rows.push(row(
        Estimator::Truth,
        None,
        Statistic::MeanDiff,
        None,
        truth.mean_diff,
        truth.mean_diff,
        normal.mu,
        Some(truth.interval(config.gamma)?),
    ));

    let boot = bootstrap_replicates(
        &exp.data_e,
        &exp.data_c,
        taus,
        &BootstrapConfig::new(config.resamples, derive_seed(exp.seed, 1)),
    )?;
    let bs = summarize_mean_diff(&boot.mean_diff, config.gamma)?;
    let decisions = [
        (
            Statistic::MeanDiff,
            bs.mean_diff.estimate,
            interval(&bs.mean_diff),
        ),
        (Statistic::ChanceToBeat, bs.chance_to_beat, None),
        (Statistic::ExpectedLossE, bs.expected_loss_e, None),
        (Statistic::ExpectedLossC, bs.expected_loss_c, None),
    ];
    for ((stat, est, ci), &(_, t, reference)) in decisions.into_iter().zip(&clt) {
        rows.push(row(
            Estimator::Bootstrap,
            None,
            stat,
            None,
            t,
            est,
            reference,
            ci,
        ));
    }
    for (i, &t) in taus.iter().enumerate() {
        let m = MetricResult::from_values(&boot.quantile_diff[i], config.gamma)?;
        rows.push(row(
            Estimator::Bootstrap,
            None,
            Statistic::QuantileDiff,
            Some(t),
            truth.delta_q[i],
            m.estimate,
            empirical_dq[i],
            interval(&m),
        ));
    }

    for &k in &config.bin_counts {
        let bins = BinSpec::equal_width(k, 0.0, 1.0)?;
        let prior = PriorVector::uniform(k)?;
        let (post_e, _) =
            DirichletPosterior::from_data(&exp.data_e, &bins, &prior, OutOfRange::Reject)?;
        let (post_c, _) =
            DirichletPosterior::from_data(&exp.data_c, &bins, &prior, OutOfRange::Reject)?;
        let cfg = JointDrawConfig::new(config.draws, derive_seed(exp.seed, 100 + k as u64))
            .with_gamma(config.gamma);
        let jd = JointDraws::sample(&post_e, &post_c, taus, &cfg)?;
        let md = jd.mean_diff();
        let metrics = [
            (Statistic::MeanDiff, md.estimate, interval(&md)),
            (Statistic::ChanceToBeat, jd.chance_to_beat().estimate, None),
            (
                Statistic::ExpectedLossE,
                jd.expected_loss_e().estimate,
                None,
            ),
            (
                Statistic::ExpectedLossC,
                jd.expected_loss_c().estimate,
                None,
            ),
        ];
        for ((stat, est, ci), &(_, t, reference)) in metrics.into_iter().zip(&clt) {
            rows.push(row(
                Estimator::Dirichlet,
                Some(k),
                stat,
                None,
                t,
                est,
                reference,
                ci,
            ));
        }
        for (i, &t) in taus.iter().enumerate() {
            let m = jd.quantile_result(i);
            rows.push(row(
                Estimator::Dirichlet,
                Some(k),
                Statistic::QuantileDiff,
                Some(t),
                truth.delta_q[i],
                m.estimate,
                empirical_dq[i],
                interval(&m),
            ));
        }
    }

    Ok(SimulationRecord {
        sim_id,
        seed: exp.seed,
        n_visitors: exp.data_e.len(),
        model_e: exp.model_e,
        model_c: exp.model_c,
        truth: exp.truth,
        rows,
    })
}

/// One simulation end to end. Numerical failures are reported, not raised.
pub fn run_single(config: &StudyConfig, sim_id: usize) -> SimOutcome {
    let seed = derive_seed(config.master_seed, sim_id as u64);
    match simulate_experiment(config, sim_id).and_then(|exp| evaluate(config, sim_id, exp)) {
        Ok(rec) => SimOutcome::Completed(rec),
        Err(e) => {
            log::warn!("simulation {sim_id} failed: {e}");
            SimOutcome::Failed(SimFailure {
                sim_id,
                seed,
                error: e.to_string(),
            })
        }
    }
}

/// Runs the study in parallel batches and hands outcomes to `sink` in
/// `sim_id` order, so output is identical for any thread count.
pub fn run_study_with<F, E>(config: &StudyConfig, mut sink: F) -> std::result::Result<(), E>
where
    F: FnMut(SimOutcome) -> std::result::Result<(), E>,
    E: From<Error>,
{
    config.validate()?;
    let batch = (rayon::current_num_threads() * 2).max(1);
    let mut start = 0;
    while start < config.n_sims {
        let end = (start + batch).min(config.n_sims);
        let outcomes: Vec<SimOutcome> = (start..end)
            .into_par_iter()
            .map(|id| run_single(config, id))
            .collect();
        for o in outcomes {
            sink(o)?;
        }
        start = end;
    }
    Ok(())
}

pub fn run_study(config: &StudyConfig) -> Result<Vec<SimOutcome>> {
    let mut out = Vec::with_capacity(config.n_sims);
    run_study_with(config, |o| {
        out.push(o);
        Ok::<_, Error>(())
    })?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct CsvRow {
    sim_id: usize,
    estimator: String,
    bin_count: Option<usize>,
    tau: Option<f64>,
    statistic: String,
    truth: f64,
    estimate: f64,
    offset: f64,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    covered: Option<bool>,
    empirical: f64,
    empirical_offset: f64,
    n_visitors: usize,
    version: &'static str,
}

/// Long-format CSV of estimate rows. Empty cells stand for "not applicable".
pub struct StudyCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> StudyCsvWriter<W> {
    pub fn new(writer: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(writer),
        }
    }

    pub fn write_record(&mut self, rec: &SimulationRecord) -> csv::Result<()> {
        for r in &rec.rows {
            self.inner.serialize(CsvRow {
                sim_id: rec.sim_id,
                estimator: r.estimator.to_string(),
                bin_count: r.bin_count,
                tau: r.tau,
                statistic: r.statistic.to_string(),
                truth: r.truth,
                estimate: r.estimate,
                offset: r.offset(),
                ci_lo: r.ci.map(|c| c.0),
                ci_hi: r.ci.map(|c| c.1),
                covered: r.covered(),
                empirical: r.empirical,
                empirical_offset: r.empirical_offset(),
                n_visitors: rec.n_visitors,
                version: crate::VERSION,
            })?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }

    pub fn into_inner(self) -> std::io::Result<W> {
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}
