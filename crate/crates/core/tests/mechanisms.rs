use dpla_core::mechanisms::{
    empirical_dp_check, gaussian_sigma, sample_gaussian, sample_laplace, DpCheckConfig, PrivacyBudget, RngState,
    Sensitivity,
};
use statrs::distribution::{ContinuousCDF, Laplace, Normal};

/// One-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn laplace_matches_its_cdf() {
    let mut rng = RngState::from_seed(11);
    let mut xs: Vec<f64> = (0..100_000).map(|_| sample_laplace(1.0, &mut rng).unwrap()).collect();
    assert!((variance(&xs) / 2.0 - 1.0).abs() < 0.05);
    let reference = Laplace::new(0.0, 1.0).unwrap();
    let d = ks_statistic(&mut xs, |x| reference.cdf(x));
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn laplace_scale_stretches_the_distribution() {
    let mut rng = RngState::from_seed(12);
    let mut xs: Vec<f64> = (0..50_000).map(|_| sample_laplace(3.0, &mut rng).unwrap()).collect();
    let reference = Laplace::new(0.0, 3.0).unwrap();
    assert!(ks_statistic(&mut xs, |x| reference.cdf(x)) < 0.01);
}

#[test]
fn gaussian_matches_its_cdf() {
    let sigma = gaussian_sigma(Sensitivity::l2(1.0).unwrap(), PrivacyBudget::new(1.0, 1e-5).unwrap()).unwrap();
    let mut rng = RngState::from_seed(13);
    let mut xs: Vec<f64> = (0..100_000).map(|_| sample_gaussian(sigma, &mut rng).unwrap()).collect();
    let reference = Normal::new(0.0, sigma).unwrap();
    assert!(ks_statistic(&mut xs, |x| reference.cdf(x)) < 0.01);
}

#[test]
fn count_query_respects_every_grid_budget() {
    let d = [1u8, 0, 1, 1, 0, 0, 1, 0, 1, 1];
    let mut d_prime = d;
    d_prime[3] = 0;
    let count = |rows: &[u8]| rows.iter().map(|&r| f64::from(r)).sum::<f64>();
    for eps in [0.1, 0.5, 1.0, 2.0] {
        let report = empirical_dp_check(
            count,
            &d,
            &d_prime,
            Sensitivity::l1(1.0).unwrap(),
            PrivacyBudget::pure(eps).unwrap(),
            &DpCheckConfig::default(),
            &mut RngState::from_seed(eps.to_bits()),
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.bins_compared > 0);
    }
}

#[test]
fn understated_sensitivity_is_caught() {
    // The query moves by 5 between neighbours but claims sensitivity 1.
    let d = [0u8, 1];
    let d_prime = [0u8, 0];
    let scaled = |rows: &[u8]| 5.0 * rows.iter().map(|&r| f64::from(r)).sum::<f64>();
    let report = empirical_dp_check(
        scaled,
        &d,
        &d_prime,
        Sensitivity::l1(1.0).unwrap(),
        PrivacyBudget::pure(1.0).unwrap(),
        &DpCheckConfig::default(),
        &mut RngState::from_seed(5),
    )
    .unwrap();
    assert!(!report.passed);
}
