mod common;

use common::*;
use nsgp_core::{
    correlation, covariance_matrix, nonstationary_cov, stationary_cov, AnisotropyParams,
    CorrelationFamily, Location, MixtureComponentSet, StationaryParams,
};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = CorrelationFamily> {
    prop::sample::select(CorrelationFamily::ALL.to_vec())
}

/// Smallest eigenvalue relative to the average diagonal.
fn min_rel_eigenvalue(c: &nalgebra::DMatrix<f64>) -> f64 {
    let n = c.nrows() as f64;
    let scale = c.trace() / n;
    let ev = c.clone().symmetric_eigen().eigenvalues;
    ev.iter().copied().fold(f64::INFINITY, f64::min) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nonstationary_cov_is_symmetric(seed in any::<u64>(), f in family()) {
        let mut r = rng(seed);
        let cov = varying(random_mixture(&mut r, 4, 5.0), f);
        let pts = random_locations(&mut r, 2, 5.0);
        let a = nonstationary_cov(&pts[0], &pts[1], &cov);
        let b = nonstationary_cov(&pts[1], &pts[0], &cov);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn prefactor_and_covariance_are_bounded(seed in any::<u64>(), f in family()) {
        let mut r = rng(seed);
        let cov = varying(random_mixture(&mut r, 4, 5.0), f);
        let pts = random_locations(&mut r, 2, 5.0);
        let (a, b) = (cov.point(&pts[0]), cov.point(&pts[1]));
        let avg = a.kernel.midpoint(&b.kernel);
        let pre = (a.kernel.det() * b.kernel.det()).powf(0.25) / avg.det().sqrt();
        prop_assert!(pre <= 1.0 + 1e-12);
        let c = nonstationary_cov(&pts[0], &pts[1], &cov);
        prop_assert!(c.abs() <= a.sd * b.sd * (1.0 + 1e-12));
    }

    #[test]
    fn prefactor_is_one_for_equal_kernels(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = random_kernel(&mut r, 0.01, 10.0);
        let pre = k.det().sqrt() / k.midpoint(&k).det().sqrt();
        prop_assert!((pre - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn identical_components_reduce_to_stationary(seed in any::<u64>(), f in family()) {
        let mut r = rng(seed);
        let kernel = random_kernel(&mut r, 0.05, 3.0);
        let aniso = kernel.to_anisotropy();
        let kappa = f.has_smoothness().then_some(1.7);
        let mc = MixtureComponentSet::uniform(
            random_locations(&mut r, 5, 5.0), kernel, 1.3, 0.2, kappa, 0.8,
        ).unwrap();
        let cov = varying(mc, f);
        let p = StationaryParams { aniso, sigma2: 1.3, tau2: 0.2, kappa };
        let pts = random_locations(&mut r, 2, 5.0);
        let ns = nonstationary_cov(&pts[0], &pts[1], &cov);
        let st = stationary_cov(&pts[0], &pts[1], &p, f).unwrap();
        prop_assert!((ns - st).abs() <= 1e-12, "{} vs {}", ns, st);
    }

    #[test]
    fn assembled_matrix_is_psd(seed in any::<u64>(), f in family()) {
        let mut r = rng(seed);
        // the wave correlation is not positive definite in every dimension,
        // which the blended kernels need; it is only safe as a single component
        let k = if f == CorrelationFamily::Wave { 1 } else { 1 + (seed % 5) as usize };
        let n = 2 + (seed % 39) as usize;
        let cov = global_kappa(random_mixture(&mut r, k, 5.0), f);
        let coords = random_locations(&mut r, n, 5.0);
        let (omega, d) = covariance_matrix(&coords, &cov);
        prop_assert!(omega.is_symmetric(0.0));
        for (i, p) in coords.iter().enumerate() {
            prop_assert_eq!(omega[(i, i)], cov.point(p).sd.powi(2));
            prop_assert_eq!(d[i], cov.point(p).tau2);
        }
        prop_assert!(min_rel_eigenvalue(&total_cov(&coords, &cov)) >= -1e-8);
    }
}

#[test]
fn ten_point_configuration_is_psd() {
    let mut r = rng(10);
    for f in CorrelationFamily::ALL {
        let k = if f == CorrelationFamily::Wave { 1 } else { 3 };
        let cov = global_kappa(random_mixture(&mut r, k, 5.0), f);
        let coords = random_locations(&mut r, 10, 5.0);
        let c = total_cov(&coords, &cov);
        let ev = c.clone().symmetric_eigen().eigenvalues;
        let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-8 * c.trace() / 10.0, "{f}: {min}");
    }
}

#[test]
fn matern_half_is_exponential() {
    for i in 0..200 {
        let h = i as f64 * 0.05;
        let m = correlation(CorrelationFamily::Matern, h, Some(0.5)).unwrap();
        let e = correlation(CorrelationFamily::Exponential, h, None).unwrap();
        assert!((m - e).abs() < 1e-12, "h = {h}: {m} vs {e}");
    }
}

#[test]
fn matern_large_smoothness_decreases_like_gaussian() {
    let mut prev = 1.0;
    for i in 1..400 {
        let h = i as f64 * 0.05;
        let m = correlation(CorrelationFamily::Matern, h, Some(30.0)).unwrap();
        assert!(m <= prev && m >= 0.0, "h = {h}");
        prev = m;
    }
    // both are smooth at the origin: the drop over a short lag is second order
    let h = 0.05;
    let drop = 1.0 - correlation(CorrelationFamily::Matern, h, Some(30.0)).unwrap();
    assert!(drop < h * h);
    let drop = 1.0 - correlation(CorrelationFamily::Gaussian, h, None).unwrap();
    assert!(drop < h * h);
}

#[test]
fn stationary_cov_uses_the_mahalanobis_norm() {
    let p = StationaryParams {
        aniso: AnisotropyParams::new(4.0, 1.0, 0.0).unwrap(),
        sigma2: 2.0,
        tau2: 0.0,
        kappa: None,
    };
    let v = stationary_cov(
        &Location::new(0.0, 0.0),
        &Location::new(2.0, 0.0),
        &p,
        CorrelationFamily::Exponential,
    )
    .unwrap();
    assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
}
