//! Two-group analysis report and the plain-text observation format.

use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_taus, JointDrawConfig, JointDraws, MetricResult, QuantileRow};
use crate::posterior::{
    bin_observations, BinSpec, ClampTally, DirichletPosterior, OutOfRange, PriorVector,
};
use crate::stats::check_level;
use crate::VERSION;

/// Where the prior concentration comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// `1/K` in every bin.
    Uniform,
    /// `1/K + strength * n_i` from binned historical observations.
    History {
        source: String,
        strength: f64,
        observations: u64,
    },
}

/// Evenly spaced quantile levels `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for QuantileGrid {
    fn default() -> Self {
        Self {
            start: 0.01,
            stop: 0.99,
            step: 0.01,
        }
    }
}

impl QuantileGrid {
    pub fn taus(&self) -> Result<Vec<f64>> {
        let ok = self.start > 0.0
            && self.stop < 1.0
            && self.start <= self.stop
            && self.step > 0.0
            && self.step.is_finite();
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "quantile grid {self} must satisfy 0 < start <= stop < 1 and step > 0"
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // Rounding keeps levels like 0.07 from printing as 0.07000000000000001.
        let taus: Vec<f64> = (0..n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect();
        check_taus(&taus)?;
        Ok(taus)
    }
}

impl fmt::Display for QuantileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl std::str::FromStr for QuantileGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got {s:?}"));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{p:?} is not a number"))
        };
        Ok(Self {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub bins: usize,
    pub lower: f64,
    pub upper: f64,
    pub draws: usize,
    pub seed: u64,
    pub gamma: f64,
    pub quantiles: QuantileGrid,
    pub clamp: bool,
    pub prior: PriorSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub control: u64,
    pub experiment: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupClamps {
    pub control: ClampTally,
    pub experiment: ClampTally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: String,
    pub config: AnalysisConfig,
    pub observations: GroupCounts,
    pub clamped: GroupClamps,
    /// P(mean_E > mean_C).
    pub chance_to_beat: MetricResult,
    /// Expected shortfall from shipping the experiment.
    pub expected_loss_e: MetricResult,
    /// Expected shortfall from keeping the control.
    pub expected_loss_c: MetricResult,
    /// mean_E - mean_C.
    pub mean_diff: MetricResult,
    /// Pointwise credible band of Q_E(tau) - Q_C(tau).
    pub quantile_curve: Vec<QuantileRow>,
    /// How `quantile_curve` intervals hold: per level, not jointly.
    pub quantile_band: String,
}

pub const QUANTILE_BAND: &str = "pointwise";

impl AnalysisReport {
    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        let mut s = serde_json::to_string_pretty(&value).expect("value is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// CSV of the quantile curve, one row per level.
    pub fn quantile_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["tau", "mean", "ci_lo", "ci_hi", "version"])
            .expect("in-memory write");
        for r in &self.quantile_curve {
            w.write_record(&[
                r.tau.to_string(),
                r.mean.to_string(),
                r.ci_lo.to_string(),
                r.ci_hi.to_string(),
                self.version.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Inputs to [`analyze`] beyond the two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub bins: usize,
    pub lower: f64,
    pub upper: f64,
    pub draws: usize,
    pub seed: u64,
    pub gamma: f64,
    pub quantiles: QuantileGrid,
    pub policy: OutOfRange,
    /// Historical observations and prior strength.
    pub history: Option<(String, Vec<f64>, f64)>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            bins: 100,
            lower: 0.0,
            upper: 1.0,
            draws: crate::metrics::DEFAULT_DRAWS,
            seed: 0,
            gamma: crate::metrics::DEFAULT_GAMMA,
            quantiles: QuantileGrid::default(),
            policy: OutOfRange::Reject,
            history: None,
        }
    }
}

pub fn analyze(
    control: &[f64],
    experiment: &[f64],
    opts: &AnalyzeOptions,
) -> Result<AnalysisReport> {
    if control.is_empty() || experiment.is_empty() {
        return Err(Error::EmptyData);
    }
    check_level(opts.gamma)?;
    let taus = opts.quantiles.taus()?;
    let bins = BinSpec::equal_width(opts.bins, opts.lower, opts.upper)?;
    let (prior, prior_spec) = match &opts.history {
        None => (PriorVector::uniform(opts.bins)?, PriorSpec::Uniform),
        Some((source, data, strength)) => {
            let binned = bin_observations(data, &bins, opts.policy)?;
            (
                PriorVector::from_history(&binned.counts, *strength)?,
                PriorSpec::History {
                    source: source.clone(),
                    strength: *strength,
                    observations: binned.counts.total(),
                },
            )
        }
    };
    let (post_c, binned_c) = DirichletPosterior::from_data(control, &bins, &prior, opts.policy)?;
    let (post_e, binned_e) = DirichletPosterior::from_data(experiment, &bins, &prior, opts.policy)?;
    let cfg = JointDrawConfig::new(opts.draws, opts.seed).with_gamma(opts.gamma);
    let jd = JointDraws::sample(&post_e, &post_c, &taus, &cfg)?;
    Ok(AnalysisReport {
        version: VERSION.to_string(),
        config: AnalysisConfig {
            bins: opts.bins,
            lower: opts.lower,
            upper: opts.upper,
            draws: opts.draws,
            seed: opts.seed,
            gamma: opts.gamma,
            quantiles: opts.quantiles,
            clamp: opts.policy == OutOfRange::Clamp,
            prior: prior_spec,
        },
        observations: GroupCounts {
            control: binned_c.counts.total(),
            experiment: binned_e.counts.total(),
        },
        clamped: GroupClamps {
            control: binned_c.clamped,
            experiment: binned_e.clamped,
        },
        chance_to_beat: jd.chance_to_beat(),
        expected_loss_e: jd.expected_loss_e(),
        expected_loss_c: jd.expected_loss_c(),
        mean_diff: jd.mean_diff(),
        quantile_curve: jd.quantile_curve().rows,
        quantile_band: QUANTILE_BAND.to_string(),
    })
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: cannot parse {content:?} as a finite number")]
    Parse {
        path: String,
        line: usize,
        content: String,
    },
}

/// Reads one finite number per line. A first line that does not parse is
/// taken as a header; any later bad line is an error.
pub fn read_observations(path: &Path) -> std::result::Result<Vec<f64>, InputError> {
    let name = path.display().to_string();
    let io = |source| InputError::Io {
        path: name.clone(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        let text = line.trim();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Err(_) if i == 0 => {}
            _ => {
                return Err(InputError::Parse {
                    path: name,
                    line: i + 1,
                    content: line,
                })
            }
        }
    }
    Ok(out)
}
