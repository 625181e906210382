use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::study::{Estimator, SimulationRecord, Statistic};
use crate::stats::{mean, quantile_sorted, sample_variance, sorted_copy};

/// Dirichlet offsets more spread out than the bootstrap's by this factor are
/// flagged.
pub const WIDE_OFFSET_RATIO: f64 = 1.25;

/// Aggregates of one (estimator, bin count, statistic, tau) cell over all
/// completed simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub bin_count: Option<usize>,
    pub statistic: Statistic,
    pub tau: Option<f64>,
    pub n: usize,
    pub mean_offset: f64,
    pub sd_offset: f64,
    pub mean_abs_offset: f64,
    pub mean_empirical_offset: f64,
    pub sd_empirical_offset: f64,
    pub coverage: Option<f64>,
    pub median_range: Option<f64>,
    /// Offset spread exceeds the bootstrap's for the same statistic.
    pub wide_offsets: bool,
}

type Key = (Estimator, Option<usize>, Statistic, Option<u64>);

#[derive(Default)]
struct Acc {
    offsets: Vec<f64>,
    empirical: Vec<f64>,
    covered: Vec<bool>,
    ranges: Vec<f64>,
}

fn median(values: &[f64]) -> f64 {
    quantile_sorted(&sorted_copy(values), 0.5)
}

pub fn summarize(records: &[SimulationRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<Key, Acc> = BTreeMap::new();
    for rec in records {
        for r in &rec.rows {
            // Non-negative taus order the same way as their bit patterns.
            let key = (
                r.estimator,
                r.bin_count,
                r.statistic,
                r.tau.map(f64::to_bits),
            );
            let acc = cells.entry(key).or_default();
            acc.offsets.push(r.offset());
            acc.empirical.push(r.empirical_offset());
            if let Some(c) = r.covered() {
                acc.covered.push(c);
            }
            if let Some(w) = r.ci_range() {
                acc.ranges.push(w);
            }
        }
    }

    let mut rows: Vec<SummaryRow> = cells
        .into_iter()
        .map(|((estimator, bin_count, statistic, tau), acc)| SummaryRow {
            estimator,
            bin_count,
            statistic,
            tau: tau.map(f64::from_bits),
            n: acc.offsets.len(),
            mean_offset: mean(&acc.offsets),
            sd_offset: sample_variance(&acc.offsets).sqrt(),
            mean_abs_offset: acc.offsets.iter().map(|o| o.abs()).sum::<f64>()
                / acc.offsets.len() as f64,
            mean_empirical_offset: mean(&acc.empirical),
            sd_empirical_offset: sample_variance(&acc.empirical).sqrt(),
            coverage: (!acc.covered.is_empty()).then(|| {
                acc.covered.iter().filter(|&&c| c).count() as f64 / acc.covered.len() as f64
            }),
            median_range: (!acc.ranges.is_empty()).then(|| median(&acc.ranges)),
            wide_offsets: false,
        })
        .collect();

    let boot_sd: BTreeMap<(Statistic, Option<u64>), f64> = rows
        .iter()
        .filter(|r| r.estimator == Estimator::Bootstrap)
        .map(|r| ((r.statistic, r.tau.map(f64::to_bits)), r.sd_offset))
        .collect();
    for r in rows
        .iter_mut()
        .filter(|r| r.estimator == Estimator::Dirichlet)
    {
        if let Some(&sd) = boot_sd.get(&(r.statistic, r.tau.map(f64::to_bits))) {
            r.wide_offsets = r.sd_offset > WIDE_OFFSET_RATIO * sd;
        }
    }
    rows
}
