use libm::lgamma as ln_gamma;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};

use super::bins::{
    bin_observations, build_value_map, BinCounts, BinSpec, Binned, OutOfRange, ValueMap,
};
use super::draw::{check_simplex, PosteriorDraw};
use crate::error::{Error, Result};

fn check_concentration(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::InvalidConcentration("empty vector".into()));
    }
    if let Some(i) = alpha.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidConcentration(format!(
            "component {i} = {} is not a positive finite number",
            alpha[i]
        )));
    }
    Ok(())
}

/// Dirichlet prior concentration over the bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorVector {
    alpha: Vec<f64>,
}

impl PriorVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        check_concentration(&alpha)?;
        Ok(Self { alpha })
    }

    /// `alpha = 1/K` in every bin, total prior weight of one observation.
    pub fn uniform(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConcentration("zero bins".into()));
        }
        Ok(Self {
            alpha: vec![1.0 / bins as f64; bins],
        })
    }

    /// Uniform base prior plus historical counts scaled by `strength`:
    /// `alpha_i = 1/K + strength * history_i`.
    pub fn from_history(history: &BinCounts, strength: f64) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior strength {strength} must be finite and non-negative"
            )));
        }
        let base = 1.0 / history.len() as f64;
        Self::new(
            history
                .counts()
                .iter()
                .map(|&n| base + strength * n as f64)
                .collect(),
        )
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Posterior `Dir(alpha + n)` together with the bin-to-value mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletPosterior {
    alpha_star: Vec<f64>,
    bins: Option<BinSpec>,
    values: ValueMap,
}

impl DirichletPosterior {
    pub fn new(alpha_star: Vec<f64>, bins: Option<BinSpec>, values: ValueMap) -> Result<Self> {
        check_concentration(&alpha_star)?;
        if alpha_star.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha_star.len(),
                found: values.len(),
            });
        }
        if let Some(b) = &bins {
            values.check_within(b)?;
        }
        Ok(Self {
            alpha_star,
            bins,
            values,
        })
    }

    /// Bins the data, builds the median value map and applies the update.
    pub fn from_data(
        data: &[f64],
        bins: &BinSpec,
        prior: &PriorVector,
        policy: OutOfRange,
    ) -> Result<(Self, Binned)> {
        let binned = bin_observations(data, bins, policy)?;
        let values = match policy {
            OutOfRange::Reject => build_value_map(data, bins)?,
            OutOfRange::Clamp => {
                let (clamped, _) = super::bins::clamp_to_bins(data, bins, policy)?;
                build_value_map(&clamped, bins)?
            }
        };
        let post = posterior_update(prior, &binned.counts, &values)?.with_bins(bins.clone())?;
        Ok((post, binned))
    }

    /// Attaches (and validates against) a bin specification.
    pub fn with_bins(mut self, bins: BinSpec) -> Result<Self> {
        self.values.check_within(&bins)?;
        self.bins = Some(bins);
        Ok(self)
    }

    pub fn alpha_star(&self) -> &[f64] {
        &self.alpha_star
    }

    pub fn bins(&self) -> Option<&BinSpec> {
        self.bins.as_ref()
    }

    pub fn values(&self) -> &ValueMap {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.alpha_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_star.is_empty()
    }

    pub fn concentration_total(&self) -> f64 {
        self.alpha_star.iter().sum()
    }

    /// Analytic component means `alpha_i / sum(alpha)`.
    pub fn mean_proportions(&self) -> Vec<f64> {
        let total = self.concentration_total();
        self.alpha_star.iter().map(|a| a / total).collect()
    }

    /// Posterior expectation of the weighted mean.
    pub fn expected_weighted_mean(&self) -> f64 {
        let total = self.concentration_total();
        self.alpha_star
            .iter()
            .zip(self.values.values())
            .map(|(a, v)| a * v)
            .sum::<f64>()
            / total
    }

    pub fn sampler(&self) -> DirichletSampler {
        DirichletSampler::new(&self.alpha_star)
    }

    /// Log of the Dirichlet density at `x`.
    pub fn log_density(&self, x: &PosteriorDraw) -> Result<f64> {
        log_density(self, x)
    }
}

/// Conjugate update: `alpha* = alpha + n`, component-wise.
pub fn posterior_update(
    prior: &PriorVector,
    counts: &BinCounts,
    values: &ValueMap,
) -> Result<DirichletPosterior> {
    if prior.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            found: counts.len(),
        });
    }
    let alpha_star = prior
        .alpha()
        .iter()
        .zip(counts.counts())
        .map(|(a, &n)| a + n as f64)
        .collect();
    DirichletPosterior::new(alpha_star, None, values.clone())
}

/// Bayesian bootstrap as a degenerate binned posterior: one bin per datum
/// (duplicates kept), sorted ascending, valued at the datum, with flat unit
/// weights so each draw is a `Dir(1, ..., 1)` weighting of the data.
pub fn bayesian_bootstrap_posterior(data: &[f64]) -> Result<DirichletPosterior> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let values = ValueMap::new(sorted)?;
    DirichletPosterior::new(vec![1.0; data.len()], None, values)
}

enum ComponentSampler {
    /// Shape >= 1: plain gamma variate.
    Direct(Gamma<f64>),
    /// Shape < 1: `Gamma(a + 1) * U^(1/a)`.
    Boosted { gamma: Gamma<f64>, inv_shape: f64 },
}

/// Dirichlet sampler built from normalized gamma variates.
///
/// When every shape is below one the variates can all underflow, so that case
/// is handled in log space.
pub struct DirichletSampler {
    components: Vec<ComponentSampler>,
    all_small: bool,
}

impl DirichletSampler {
    pub fn new(alpha: &[f64]) -> Self {
        let components: Vec<ComponentSampler> = alpha
            .iter()
            .map(|&a| {
                if a >= 1.0 {
                    ComponentSampler::Direct(Gamma::new(a, 1.0).expect("valid shape"))
                } else {
                    ComponentSampler::Boosted {
                        gamma: Gamma::new(a + 1.0, 1.0).expect("valid shape"),
                        inv_shape: 1.0 / a,
                    }
                }
            })
            .collect();
        let all_small = alpha.iter().all(|&a| a < 1.0);
        Self {
            components,
            all_small,
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Fills `out` with one simplex draw.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.components.len());
        if self.all_small {
            self.fill_log(rng, out);
            return;
        }
        let mut sum = 0.0;
        for (slot, c) in out.iter_mut().zip(&self.components) {
            let g = match c {
                ComponentSampler::Direct(g) => g.sample(rng),
                ComponentSampler::Boosted { gamma, inv_shape } => {
                    let u: f64 = Open01.sample(rng);
                    gamma.sample(rng) * u.powf(*inv_shape)
                }
            };
            *slot = g;
            sum += g;
        }
        normalize(out, sum);
    }

    fn fill_log<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut max = f64::NEG_INFINITY;
        for (slot, c) in out.iter_mut().zip(&self.components) {
            let lg = match c {
                ComponentSampler::Direct(g) => g.sample(rng).ln(),
                ComponentSampler::Boosted { gamma, inv_shape } => {
                    let u: f64 = Open01.sample(rng);
                    gamma.sample(rng).ln() + u.ln() * inv_shape
                }
            };
            *slot = lg;
            max = max.max(lg);
        }
        let mut sum = 0.0;
        for slot in out.iter_mut() {
            *slot = (*slot - max).exp();
            sum += *slot;
        }
        normalize(out, sum);
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PosteriorDraw {
        let mut x = vec![0.0; self.dim()];
        self.fill(rng, &mut x);
        PosteriorDraw::from_trusted(x)
    }
}

#[inline]
fn normalize(out: &mut [f64], sum: f64) {
    for v in out.iter_mut() {
        *v /= sum;
    }
}

/// `n_draws` i.i.d. draws from the posterior.
pub fn sample_posterior<R: Rng + ?Sized>(
    post: &DirichletPosterior,
    n_draws: usize,
    rng: &mut R,
) -> Result<Vec<PosteriorDraw>> {
    if n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
    }
    let sampler = post.sampler();
    Ok((0..n_draws).map(|_| sampler.draw(rng)).collect())
}

/// `ln B(alpha) = sum ln Gamma(alpha_i) - ln Gamma(sum alpha_i)`.
pub fn ln_multivariate_beta(alpha: &[f64]) -> f64 {
    alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha.iter().sum())
}

/// Log Dirichlet density at a simplex point.
///
/// A zero coordinate with concentration below one makes the density
/// unbounded; that is reported as [`Error::NonFiniteDensity`] carrying
/// `+inf`. A zero coordinate with concentration above one gives `-inf`.
pub fn log_density(post: &DirichletPosterior, x: &PosteriorDraw) -> Result<f64> {
    let alpha = post.alpha_star();
    if x.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            found: x.len(),
        });
    }
    check_simplex(x.proportions())?;
    let mut acc = -ln_multivariate_beta(alpha);
    for (i, (&a, &xi)) in alpha.iter().zip(x.proportions()).enumerate() {
        if a == 1.0 {
            continue;
        }
        if xi == 0.0 {
            if a < 1.0 {
                return Err(Error::NonFiniteDensity {
                    index: i,
                    log_density: f64::INFINITY,
                });
            }
            return Ok(f64::NEG_INFINITY);
        }
        acc += (a - 1.0) * xi.ln();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn flat_values(k: usize) -> ValueMap {
        ValueMap::new((0..k).map(|i| i as f64).collect()).unwrap()
    }

    fn post(alpha: &[f64]) -> DirichletPosterior {
        DirichletPosterior::new(alpha.to_vec(), None, flat_values(alpha.len())).unwrap()
    }

    #[test]
    fn conjugate_update_is_exact() {
        let prior = PriorVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let counts = BinCounts::new(vec![1, 3, 1]);
        let p = posterior_update(&prior, &counts, &flat_values(3)).unwrap();
        assert_eq!(p.alpha_star(), &[2.0, 4.0, 2.0]);
    }

    #[test]
    fn no_data_returns_prior() {
        let prior = PriorVector::uniform(4).unwrap();
        let p = posterior_update(&prior, &BinCounts::zeros(4), &flat_values(4)).unwrap();
        assert_eq!(p.alpha_star(), &[0.25; 4]);
    }

    #[test]
    fn sequential_updates_add_up() {
        let prior = PriorVector::uniform(3).unwrap();
        let c1 = BinCounts::new(vec![4, 0, 7]);
        let c2 = BinCounts::new(vec![1, 2, 3]);
        let once = posterior_update(&prior, &c1.merge(&c2).unwrap(), &flat_values(3)).unwrap();
        let first = posterior_update(&prior, &c1, &flat_values(3)).unwrap();
        let as_prior = PriorVector::new(first.alpha_star().to_vec()).unwrap();
        let twice = posterior_update(&as_prior, &c2, &flat_values(3)).unwrap();
        for (a, b) in once.alpha_star().iter().zip(twice.alpha_star()) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * a);
        }
    }

    #[test]
    fn update_dimension_mismatch() {
        let prior = PriorVector::uniform(3).unwrap();
        assert!(matches!(
            posterior_update(&prior, &BinCounts::zeros(4), &flat_values(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn history_prior_scales_counts() {
        let p = PriorVector::from_history(&BinCounts::new(vec![0, 2, 6, 0]), 0.5).unwrap();
        assert_eq!(p.alpha(), &[0.25, 1.25, 3.25, 0.25]);
        assert!(PriorVector::from_history(&BinCounts::new(vec![1, 1]), -1.0).is_err());
    }

    #[test]
    fn degenerate_concentration_draw() {
        let p = post(&[1e9, 1.0]);
        let mut rng = rng_from_seed(3);
        let d = sample_posterior(&p, 1, &mut rng).unwrap();
        assert!((d[0].proportions()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_draws() {
        let p = post(&[2.0, 4.0, 2.0, 0.3]);
        let a = sample_posterior(&p, 50, &mut rng_from_seed(11)).unwrap();
        let b = sample_posterior(&p, 50, &mut rng_from_seed(11)).unwrap();
        assert_eq!(a, b);
        assert!(sample_posterior(&p, 0, &mut rng_from_seed(11)).is_err());
    }

    #[test]
    fn tiny_concentrations_stay_on_simplex() {
        let p = post(&[1e-3; 64]);
        let mut rng = rng_from_seed(5);
        for d in sample_posterior(&p, 200, &mut rng).unwrap() {
            let sum: f64 = d.proportions().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(d.proportions().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn log_density_reference_values() {
        let uniform = post(&[1.0, 1.0, 1.0]);
        let x = PosteriorDraw::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((uniform.log_density(&x).unwrap() - 2f64.ln()).abs() < 1e-12);

        let beta22 = post(&[2.0, 2.0]);
        let half = PosteriorDraw::new(vec![0.5, 0.5]).unwrap();
        assert!((beta22.log_density(&half).unwrap() - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_density_boundaries() {
        let edge = PosteriorDraw::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            post(&[0.5, 2.0]).log_density(&edge),
            Err(Error::NonFiniteDensity { index: 0, log_density }) if log_density == f64::INFINITY
        ));
        assert_eq!(
            post(&[2.0, 2.0]).log_density(&edge).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(post(&[1.0, 2.0]).log_density(&edge).unwrap().is_finite());
        // Off-simplex input built without validation is still refused.
        let bad = PosteriorDraw::from_trusted(vec![0.5, 0.6]);
        assert!(matches!(
            post(&[2.0, 2.0]).log_density(&bad),
            Err(Error::OffSimplex { .. })
        ));
    }

    #[test]
    fn bayesian_bootstrap_construction() {
        let p = bayesian_bootstrap_posterior(&[2.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.values().values(), &[1.0, 2.0, 2.0]);
        assert_eq!(p.alpha_star(), &[1.0, 1.0, 1.0]);
        assert!(p.bins().is_none());
        assert!(matches!(
            bayesian_bootstrap_posterior(&[]),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn single_datum_bootstrap_is_a_point_mass() {
        let p = bayesian_bootstrap_posterior(&[5.0]).unwrap();
        let mut rng = rng_from_seed(1);
        for d in sample_posterior(&p, 20, &mut rng).unwrap() {
            assert_eq!(d.proportions(), &[1.0]);
            assert_eq!(
                super::super::draw::weighted_mean(&d, p.values()).unwrap(),
                5.0
            );
        }
    }

    #[test]
    fn from_data_attaches_bins() {
        let bins = BinSpec::equal_width(3, 0.0, 1.0).unwrap();
        let prior = PriorVector::new(vec![1.0; 3]).unwrap();
        let data = [0.1, 0.4, 0.5, 0.6, 0.9];
        let (p, binned) =
            DirichletPosterior::from_data(&data, &bins, &prior, OutOfRange::Reject).unwrap();
        assert_eq!(binned.counts.counts(), &[1, 3, 1]);
        assert_eq!(p.alpha_star(), &[2.0, 4.0, 2.0]);
        assert_eq!(p.values().values()[1], 0.5);
        assert_eq!(p.bins(), Some(&bins));
    }
}
