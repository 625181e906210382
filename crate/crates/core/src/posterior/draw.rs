use serde::{Deserialize, Serialize};

use super::bins::ValueMap;
use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a simplex vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// One point on the probability simplex: bin proportions summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    x: Vec<f64>,
}

impl PosteriorDraw {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        check_simplex(&x)?;
        Ok(Self { x })
    }

    pub(crate) fn from_trusted(x: Vec<f64>) -> Self {
        Self { x }
    }

    pub fn proportions(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.x
    }
}

pub(crate) fn check_simplex(x: &[f64]) -> Result<()> {
    let sum: f64 = x.iter().sum();
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if x.is_empty()
        || !sum.is_finite()
        || min < 0.0
        || max > 1.0
        || (sum - 1.0).abs() > SIMPLEX_TOLERANCE
    {
        return Err(Error::OffSimplex { sum, min });
    }
    Ok(())
}

fn check_dims(x: usize, values: usize) -> Result<()> {
    if x != values {
        return Err(Error::DimensionMismatch {
            expected: values,
            found: x,
        });
    }
    Ok(())
}

/// Population average implied by a draw: `sum_i x_i * v_i`.
pub fn weighted_mean(x: &PosteriorDraw, values: &ValueMap) -> Result<f64> {
    check_dims(x.len(), values.len())?;
    Ok(dot(x.proportions(), values.values()))
}

#[inline]
pub(crate) fn dot(x: &[f64], v: &[f64]) -> f64 {
    x.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Value of the first bin whose cumulative proportion reaches `tau`.
pub fn sample_quantile(x: &PosteriorDraw, values: &ValueMap, tau: f64) -> Result<f64> {
    check_dims(x.len(), values.len())?;
    check_tau(tau)?;
    Ok(values.values()[quantile_index(x.proportions(), tau)])
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau {tau} outside (0, 1)")))
    }
}

/// Smallest `i` with `tau <= x_0 + ... + x_i`. Falls back to the last bin if
/// rounding leaves the running sum just short of `tau`.
#[inline]
pub(crate) fn quantile_index(x: &[f64], tau: f64) -> usize {
    let mut cum = 0.0;
    for (i, &p) in x.iter().enumerate() {
        cum += p;
        if tau <= cum {
            return i;
        }
    }
    x.len() - 1
}

/// Bin indices for every `tau` in one pass; `taus` must be non-decreasing.
pub(crate) fn quantile_indices(x: &[f64], taus: &[f64], out: &mut [usize]) {
    debug_assert_eq!(taus.len(), out.len());
    let last = x.len() - 1;
    let mut i = 0;
    let mut cum = x[0];
    for (t, slot) in taus.iter().zip(out.iter_mut()) {
        while *t > cum && i < last {
            i += 1;
            cum += x[i];
        }
        *slot = i;
    }
}
