//! Checks against values computed independently here: numerical integration
//! of Beta densities, closed-form moments and direct simulation.

use dircat::baselines::{normal_chance_to_beat, NormalMeanDiff};
use dircat::metrics::{
    chance_to_beat, expected_loss_choose_c, expected_loss_choose_e, JointDrawConfig,
};
use dircat::posterior::{log_density, DirichletPosterior, PosteriorDraw, ValueMap};
use dircat::rng::rng_from_seed;
use dircat::sim::{build_grid, ground_truth, sample_visitors, BetaComponent, HurdleModel};
use statrs::distribution::{Beta, ContinuousCDF};

fn post(alpha: &[f64], values: &[f64]) -> DirichletPosterior {
    DirichletPosterior::new(
        alpha.to_vec(),
        None,
        ValueMap::new(values.to_vec()).unwrap(),
    )
    .unwrap()
}

/// Midpoint rule over the unit square for two independent densities.
fn integrate_pair(
    fe: impl Fn(f64) -> f64,
    fc: impl Fn(f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
) -> f64 {
    let m = 2000;
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        let x = (i as f64 + 0.5) * h;
        let wx = fe(x);
        for j in 0..m {
            let y = (j as f64 + 0.5) * h;
            total += wx * fc(y) * g(x, y);
        }
    }
    total * h * h
}

#[test]
fn two_bin_decision_metrics_match_integration() {
    // With values [0, 1] the weighted mean is the second proportion:
    // Beta(2, 1) for alpha [1, 2] and Beta(1, 2) for alpha [2, 1].
    let fe = |x: f64| 2.0 * x;
    let fc = |y: f64| 2.0 * (1.0 - y);
    // Cells on the diagonal are split evenly between the two sides.
    let ctb = integrate_pair(fe, fc, |x, y| match x.partial_cmp(&y).unwrap() {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    });
    let el_e = integrate_pair(fe, fc, |x, y| (y - x).max(0.0));
    let el_c = integrate_pair(fe, fc, |x, y| (x - y).max(0.0));
    assert!((ctb - 5.0 / 6.0).abs() < 1e-5, "{ctb}");
    assert!((el_e - 1.0 / 30.0).abs() < 1e-5, "{el_e}");
    assert!((el_c - 11.0 / 30.0).abs() < 1e-5, "{el_c}");

    let e = post(&[1.0, 2.0], &[0.0, 1.0]);
    let c = post(&[2.0, 1.0], &[0.0, 1.0]);
    let cfg = JointDrawConfig::new(200_000, 3);
    let mc = chance_to_beat(&e, &c, &cfg).unwrap();
    assert!((mc.estimate - ctb).abs() < 4.0 * mc.std_error);
    let mc = expected_loss_choose_e(&e, &c, &cfg).unwrap();
    assert!((mc.estimate - el_e).abs() < 4.0 * mc.std_error);
    let mc = expected_loss_choose_c(&e, &c, &cfg).unwrap();
    assert!((mc.estimate - el_c).abs() < 4.0 * mc.std_error);
}

#[test]
fn log_density_integrates_to_one_on_two_bins() {
    let p = post(&[2.5, 1.5], &[0.0, 1.0]);
    let m = 100_000;
    let h = 1.0 / m as f64;
    let total: f64 = (0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let d = PosteriorDraw::new(vec![x, 1.0 - x]).unwrap();
            log_density(&p, &d).unwrap().exp()
        })
        .sum::<f64>()
        * h;
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn log_density_integrates_to_one_on_three_bins() {
    let p = post(&[2.0, 3.0, 1.5], &[0.0, 0.5, 1.0]);
    let m = 1500;
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if x + y < 1.0 {
                let d = PosteriorDraw::new(vec![x, y, 1.0 - x - y]).unwrap();
                total += log_density(&p, &d).unwrap().exp();
            }
        }
    }
    // Midpoint cells straddling the hypotenuse are dropped or kept whole, so
    // the tolerance is a few cell widths.
    assert!((total * h * h - 1.0).abs() < 5e-3, "{}", total * h * h);
}

#[test]
fn normal_chance_to_beat_matches_table() {
    // Phi(0.5) and Phi(2) from standard tables.
    let m = NormalMeanDiff::new(0.5, 1.0).unwrap();
    assert!((normal_chance_to_beat(&m).unwrap() - 0.691_462_461_274_013).abs() < 1e-12);
    let m = NormalMeanDiff::new(-0.02, 0.01).unwrap();
    assert!((normal_chance_to_beat(&m).unwrap() - 0.022_750_131_948_179).abs() < 1e-12);
}

#[test]
fn grid_median_difference_matches_beta_quantiles() {
    let m = 100_000;
    let a = HurdleModel::single_beta(2.0, 5.0).unwrap();
    let b = HurdleModel::single_beta(5.0, 2.0).unwrap();
    let ga = build_grid(&a, m).unwrap();
    let gb = build_grid(&b, m).unwrap();
    let t = ground_truth(&gb, &ga, 10_000, 10_000, &[0.5]).unwrap();
    let med = |alpha, beta| Beta::new(alpha, beta).unwrap().inverse_cdf(0.5);
    let exact = med(5.0, 2.0) - med(2.0, 5.0);
    assert!(
        (t.delta_q[0] - exact).abs() <= 2.0 / m as f64,
        "{} vs {exact}",
        t.delta_q[0]
    );
    // Beta means are alpha / (alpha + beta).
    assert!((t.mean_diff - (5.0 / 7.0 - 2.0 / 7.0)).abs() < 1e-8);
}

#[test]
fn sampled_atoms_follow_their_masses() {
    let model = HurdleModel::new(
        0.3,
        0.2,
        vec![BetaComponent {
            weight: 0.5,
            alpha: 3.0,
            beta: 4.0,
        }],
    )
    .unwrap();
    let grid = build_grid(&model, 100_000).unwrap();
    let n = 1_000_000;
    let s = sample_visitors(&grid, n, &mut rng_from_seed(21));
    let zeros = s.iter().filter(|&&v| v == 0.0).count() as f64;
    let ones = s.iter().filter(|&&v| v == 1.0).count() as f64;
    let inner = n as f64 - zeros - ones;
    let expect = [0.3 * n as f64, 0.2 * n as f64, 0.5 * n as f64];
    let chi2: f64 = [zeros, ones, inner]
        .iter()
        .zip(expect)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    // Upper 0.001 point of chi-square with 2 degrees of freedom.
    assert!(chi2 < 13.816, "chi2 {chi2}");

    let frac = zeros / n as f64;
    let se = (0.3f64 * 0.7 / n as f64).sqrt();
    assert!((frac - 0.3).abs() < 4.0 * se);

    let mean = s.iter().sum::<f64>() / n as f64;
    let sd = grid.variance().sqrt();
    assert!((mean - grid.mean()).abs() < 4.0 * sd / (n as f64).sqrt());
    // 0.2 + 0.5 * 3/7 from the closed-form Beta mean.
    assert!((grid.mean() - (0.2 + 0.5 * 3.0 / 7.0)).abs() < 1e-8);
}
