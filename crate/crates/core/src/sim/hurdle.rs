use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SHAPE: f64 = 1.01;
pub const MAX_SHAPE: f64 = 100.0;
pub const MAX_COMPONENTS: usize = 15;

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaComponent {
    pub weight: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Point mass at 0, beta mixture on (0, 1), point mass at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurdleModel {
    p0: f64,
    p1: f64,
    components: Vec<BetaComponent>,
}

impl HurdleModel {
    pub fn new(p0: f64, p1: f64, components: Vec<BetaComponent>) -> Result<Self> {
        if !(p0 >= 0.0 && p1 >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "negative atom mass ({p0}, {p1})"
            )));
        }
        if components.is_empty() || components.len() > MAX_COMPONENTS {
            return Err(Error::InvalidModel(format!(
                "{} mixture components, expected 1..={MAX_COMPONENTS}",
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.weight.is_nan() || c.weight < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "component {i} has negative weight"
                )));
            }
            for s in [c.alpha, c.beta] {
                if !(MIN_SHAPE..=MAX_SHAPE).contains(&s) {
                    return Err(Error::InvalidModel(format!(
                        "component {i} shape {s} outside [{MIN_SHAPE}, {MAX_SHAPE}]"
                    )));
                }
            }
        }
        let total = p0 + p1 + components.iter().map(|c| c.weight).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidModel(format!("total mass {total} != 1")));
        }
        Ok(Self { p0, p1, components })
    }

    /// Atoms only; the mixture carries no mass.
    pub fn atoms(p0: f64, p1: f64) -> Result<Self> {
        Self::new(
            p0,
            p1,
            vec![BetaComponent {
                weight: 1.0 - p0 - p1,
                alpha: 2.0,
                beta: 2.0,
            }],
        )
    }

    /// A single beta distribution carrying all the mass.
    pub fn single_beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(
            0.0,
            0.0,
            vec![BetaComponent {
                weight: 1.0,
                alpha,
                beta,
            }],
        )
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn components(&self) -> &[BetaComponent] {
        &self.components
    }

    pub fn mixture_mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.p0 + self.p1 + self.mixture_mass()
    }

    /// Exact population mean (beta means are closed form).
    pub fn mean(&self) -> f64 {
        self.p1
            + self
                .components
                .iter()
                .map(|c| c.weight * c.alpha / (c.alpha + c.beta))
                .sum::<f64>()
    }
}

fn flat_dirichlet<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let unit = Gamma::new(1.0, 1.0).expect("valid shape");
    let g: Vec<f64> = (0..k).map(|_| unit.sample(rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Random model: `(p0, mixture mass, p1) ~ Dir(1, 1, 1)`, `B ~ U{1..15}`,
/// mixture weights `~ Dir(1_B)` scaled to the mixture mass, and each shape
/// parameter uniform on `[1.01, 100]`.
pub fn random_hurdle<R: Rng + ?Sized>(rng: &mut R) -> HurdleModel {
    let top = flat_dirichlet(3, rng);
    let (p0, mixture, p1) = (top[0], top[1], top[2]);
    let b = rng.random_range(1..=MAX_COMPONENTS);
    let weights = flat_dirichlet(b, rng);
    let mut components: Vec<BetaComponent> = weights
        .into_iter()
        .map(|w| BetaComponent {
            weight: w * mixture,
            alpha: rng.random_range(MIN_SHAPE..=MAX_SHAPE),
            beta: rng.random_range(MIN_SHAPE..=MAX_SHAPE),
        })
        .collect();
    // Put the rounding residue on the largest component so the total is one.
    let residue = 1.0 - (p0 + p1 + components.iter().map(|c| c.weight).sum::<f64>());
    if let Some(c) = components
        .iter_mut()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
    {
        c.weight = (c.weight + residue).max(0.0);
    }
    HurdleModel::new(p0, p1, components).expect("generated model satisfies invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn random_models_are_normalized() {
        let mut rng = rng_from_seed(1);
        for _ in 0..2000 {
            let m = random_hurdle(&mut rng);
            assert!((m.total_mass() - 1.0).abs() <= 1e-12);
            assert!((1..=15).contains(&m.components().len()));
            for c in m.components() {
                assert!((MIN_SHAPE..=MAX_SHAPE).contains(&c.alpha));
                assert!((MIN_SHAPE..=MAX_SHAPE).contains(&c.beta));
                assert!(c.weight >= 0.0);
            }
        }
    }

    #[test]
    fn seeded_generation_repeats() {
        let a = random_hurdle(&mut rng_from_seed(42));
        let b = random_hurdle(&mut rng_from_seed(42));
        assert_eq!(a, b);
    }

    #[test]
    fn p0_marginal_mean_is_one_third() {
        let mut rng = rng_from_seed(9);
        let n = 10_000;
        let p0: Vec<f64> = (0..n).map(|_| random_hurdle(&mut rng).p0()).collect();
        let m = crate::stats::mean(&p0);
        // Beta(1, 2) marginal: variance 1/18.
        let se = (1.0f64 / 18.0 / n as f64).sqrt();
        assert!((m - 1.0 / 3.0).abs() < 4.0 * se, "mean {m}");
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(HurdleModel::atoms(0.6, 0.6).is_err());
        assert!(HurdleModel::single_beta(1.0, 3.0).is_err());
        assert!(HurdleModel::new(0.0, 0.0, vec![]).is_err());
        assert!(HurdleModel::atoms(1.0, 0.0).is_ok());
    }
}
