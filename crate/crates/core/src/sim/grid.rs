use libm::lgamma as ln_gamma;
use rand::Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use super::hurdle::HurdleModel;
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 1_000_000;
pub const MIN_RESOLUTION: usize = 1_000;

/// Equal-cell discretization of a hurdle model on (0, 1) with exact atoms at
/// 0 and 1.
///
/// `cdf[i]` is the probability of `X <= midpoint(i)`, i.e. the zero atom plus
/// all cells up to and including `i`; the one atom is added after the last
/// cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannGrid {
    p0: f64,
    p1: f64,
    cdf: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl RiemannGrid {
    pub fn resolution(&self) -> usize {
        self.cdf.len()
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) / self.resolution() as f64
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Probability mass of one cell.
    pub fn cell_mass(&self, cell: usize) -> f64 {
        let below = if cell == 0 {
            self.p0
        } else {
            self.cdf[cell - 1]
        };
        self.cdf[cell] - below
    }

    /// Continuous density on the cell midpoints.
    pub fn pdf(&self) -> Vec<f64> {
        let m = self.resolution() as f64;
        (0..self.resolution())
            .map(|i| self.cell_mass(i) * m)
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf[self.cdf.len() - 1] + self.p1
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `inf { x : tau <= CDF(x) }` on the grid.
    pub fn quantile(&self, tau: f64) -> f64 {
        if tau <= self.p0 {
            return 0.0;
        }
        let idx = self.cdf.partition_point(|&c| c < tau);
        if idx < self.cdf.len() {
            self.midpoint(idx)
        } else {
            1.0
        }
    }

    /// Inverse transform sample of one visitor.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        if u <= self.p0 {
            0.0
        } else if u > 1.0 - self.p1 {
            1.0
        } else {
            let idx = self.cdf.partition_point(|&c| c < u);
            self.midpoint(idx.min(self.cdf.len() - 1))
        }
    }
}

struct Prepared {
    weight: f64,
    am1: f64,
    bm1: f64,
    ln_norm: f64,
}

/// Evaluates the beta mixture on `resolution` equal cells of (0, 1), rescales
/// the cell masses so the continuous part sums to the mixture mass, and
/// accumulates the CDF.
pub fn build_grid(model: &HurdleModel, resolution: usize) -> Result<RiemannGrid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "grid resolution {resolution} below {MIN_RESOLUTION}"
        )));
    }
    let comps: Vec<Prepared> = model
        .components()
        .iter()
        .filter(|c| c.weight > 0.0)
        .map(|c| Prepared {
            weight: c.weight,
            am1: c.alpha - 1.0,
            bm1: c.beta - 1.0,
            ln_norm: ln_gamma(c.alpha + c.beta) - ln_gamma(c.alpha) - ln_gamma(c.beta),
        })
        .collect();

    let m = resolution as f64;
    let mut cells = vec![0.0; resolution];
    let mut raw_total = 0.0;
    if !comps.is_empty() {
        for (i, slot) in cells.iter_mut().enumerate() {
            let x = (i as f64 + 0.5) / m;
            let lx = x.ln();
            let l1x = (-x).ln_1p();
            let mut d = 0.0;
            for c in &comps {
                let e = c.am1 * lx + c.bm1 * l1x + c.ln_norm;
                if e > -700.0 {
                    d += c.weight * e.exp();
                }
            }
            *slot = d;
            raw_total += d;
        }
    }

    let mixture = model.mixture_mass();
    let scale = if raw_total > 0.0 {
        mixture / raw_total
    } else {
        0.0
    };
    let mut cdf = cells;
    let mut acc = model.p0();
    let mut first = 0.0;
    let mut second = 0.0;
    for (i, slot) in cdf.iter_mut().enumerate() {
        let mass = *slot * scale;
        let x = (i as f64 + 0.5) / m;
        first += mass * x;
        second += mass * x * x;
        acc += mass;
        *slot = acc;
    }
    let p1 = model.p1();
    let mean = first + p1;
    let variance = (second + p1 - mean * mean).max(0.0);
    Ok(RiemannGrid {
        p0: model.p0(),
        p1,
        cdf,
        mean,
        variance,
    })
}

/// `n` independent visitors by inverse transform sampling.
pub fn sample_visitors<R: Rng + ?Sized>(grid: &RiemannGrid, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| grid.sample_one(rng)).collect()
}
