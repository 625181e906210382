use serde::{Deserialize, Serialize};

use super::grid::RiemannGrid;
use crate::baselines::{
    normal_chance_to_beat, normal_expected_loss_choose_c, normal_expected_loss_choose_e,
    NormalMeanDiff,
};
use crate::error::Result;
use crate::metrics::check_taus;
use crate::stats::two_sided_z;

/// Ground-truth statistics for one pair of populations at given group sizes.
///
/// Chance to beat and expected losses are taken under the Normal sampling
/// distribution of the mean difference at the true means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub mean_e: f64,
    pub mean_c: f64,
    pub mean_diff: f64,
    /// Standard deviation of the sampling distribution of the mean difference.
    pub sigma: f64,
    pub chance_to_beat: f64,
    pub expected_loss_e: f64,
    pub expected_loss_c: f64,
    pub taus: Vec<f64>,
    pub delta_q: Vec<f64>,
}

impl TruthRecord {
    /// Central interval of the true sampling distribution of the mean difference.
    pub fn interval(&self, gamma: f64) -> Result<(f64, f64)> {
        let z = two_sided_z(gamma)?;
        Ok((
            self.mean_diff - z * self.sigma,
            self.mean_diff + z * self.sigma,
        ))
    }
}

pub fn ground_truth(
    grid_e: &RiemannGrid,
    grid_c: &RiemannGrid,
    n_e: usize,
    n_c: usize,
    taus: &[f64],
) -> Result<TruthRecord> {
    check_taus(taus)?;
    let mean_diff = grid_e.mean() - grid_c.mean();
    let sigma = (grid_e.variance() / n_e as f64 + grid_c.variance() / n_c as f64).sqrt();
    let (chance_to_beat, expected_loss_e, expected_loss_c) = if sigma > 0.0 {
        let m = NormalMeanDiff::new(mean_diff, sigma)?;
        (
            normal_chance_to_beat(&m)?,
            normal_expected_loss_choose_e(&m)?,
            normal_expected_loss_choose_c(&m)?,
        )
    } else {
        // Both populations are point masses: the difference is deterministic.
        let ctb = if mean_diff > 0.0 {
            1.0
        } else if mean_diff < 0.0 {
            0.0
        } else {
            0.5
        };
        (ctb, (-mean_diff).max(0.0), mean_diff.max(0.0))
    };
    let delta_q = taus
        .iter()
        .map(|&t| grid_e.quantile(t) - grid_c.quantile(t))
        .collect();
    Ok(TruthRecord {
        mean_e: grid_e.mean(),
        mean_c: grid_c.mean(),
        mean_diff,
        sigma,
        chance_to_beat,
        expected_loss_e,
        expected_loss_c,
        taus: taus.to_vec(),
        delta_q,
    })
}
