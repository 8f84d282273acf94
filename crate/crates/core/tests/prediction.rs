mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use nsgp_core::{
    predict, predict_batched, CorrelationFamily, KernelMatrix, Location, Matrix, RegressionDesign,
};
use proptest::prelude::*;
use rand::Rng;

fn ones(m: usize) -> Matrix {
    Matrix::from_vec(m, 1, vec![1.0; m]).unwrap()
}

#[test]
fn three_point_system_matches_dense_kriging() {
    let coords = [
        Location::new(0.0, 0.0),
        Location::new(1.0, 0.3),
        Location::new(0.2, 1.1),
    ];
    let target = Location::new(0.6, 0.5);
    let (s11, s12, s22) = (0.8, 0.2, 0.5);
    let (sigma2, tau2, beta) = (1.5, 0.2, 0.7);
    let z = [1.2, -0.4, 0.9];

    // exponential covariance with the quadratic form written out by hand
    let det = s11 * s22 - s12 * s12;
    let cexp = |a: &Location, b: &Location| {
        let (dx, dy) = (a.x - b.x, a.y - b.y);
        let q = (s22 * dx * dx - 2.0 * s12 * dx * dy + s11 * dy * dy) / det;
        sigma2 * (-q.sqrt()).exp()
    };
    let c = DMatrix::from_fn(3, 3, |i, j| {
        cexp(&coords[i], &coords[j]) + if i == j { tau2 } else { 0.0 }
    });
    let k = DVector::from_fn(3, |i, _| cexp(&target, &coords[i]));
    let resid = DVector::from_fn(3, |i, _| z[i] - beta);
    let ci = c.try_inverse().unwrap();
    let want_mean = beta + (k.transpose() * &ci * resid)[(0, 0)];
    let want_var = sigma2 + tau2 - (k.transpose() * &ci * &k)[(0, 0)];

    let cov = stationary(
        KernelMatrix::new(s11, s12, s22).unwrap(),
        sigma2,
        tau2,
        CorrelationFamily::Exponential,
        None,
    );
    let model = fixed_model(
        cov,
        &coords,
        RegressionDesign::intercept(3).unwrap(),
        Matrix::column_vector(&z),
        vec![beta],
    );
    let out = predict(&model, &[target], &ones(1)).unwrap();
    assert!((out.means[(0, 0)] - want_mean).abs() < 1e-12);
    assert!((out.sds[0] - want_var.sqrt()).abs() < 1e-12);
}

fn interpolation_instance(seed: u64) -> (nsgp_core::FittedModel, Vec<Location>, Matrix) {
    let mut r = rng(seed);
    // a jittered 10 x 5 lattice keeps the nugget-free system well conditioned
    let coords: Vec<Location> = (0..50)
        .map(|i| {
            Location::new(
                (i % 10) as f64 + r.random_range(-0.2..0.2),
                (i / 10) as f64 + r.random_range(-0.2..0.2),
            )
        })
        .collect();
    let z: Vec<f64> = (0..50).map(|_| r.random_range(-2.0..2.0)).collect();
    let mut mc = random_mixture(&mut r, 3, 10.0);
    mc.nuggets.iter_mut().for_each(|v| *v = 0.0);
    mc.kernels
        .iter_mut()
        .for_each(|k| *k = random_kernel(&mut r, 0.1, 0.5));
    let cov = global_kappa(mc, CorrelationFamily::Exponential);
    let model = fixed_model(
        cov,
        &coords,
        RegressionDesign::intercept(50).unwrap(),
        Matrix::column_vector(&z),
        vec![0.3],
    );
    let data = model.data.clone();
    (model, coords, data)
}

#[test]
fn zero_nugget_interpolates_training_data() {
    let (model, coords, data) = interpolation_instance(4);
    assert_eq!(model.factor().jitter(), 0.0);
    let out = predict(&model, &coords, &ones(coords.len())).unwrap();
    for i in 0..coords.len() {
        assert!((out.means[(i, 0)] - data[(i, 0)]).abs() < 1e-6, "site {i}");
        assert!(out.sds[i] < 1e-6, "site {i}: {}", out.sds[i]);
    }
}

#[test]
fn distant_sites_revert_to_the_prior() {
    let (model, _, _) = interpolation_instance(5);
    let far = Location::new(1e4, -1e4);
    let out = predict(&model, &[far], &ones(1)).unwrap();
    let p = model.params_at(&far);
    assert!((out.means[(0, 0)] - 0.3).abs() < 1e-12);
    assert!((out.sds[0].powi(2) - (p.sd * p.sd + p.tau2)).abs() < 1e-12);
}

#[test]
fn batch_size_does_not_change_results() {
    let (model, _, _) = interpolation_instance(6);
    let grid =
        nsgp_core::geometry::regular_grid(Location::new(0.0, 0.0), Location::new(9.0, 4.0), 23, 11);
    let x = ones(grid.len());
    let full = predict(&model, &grid, &x).unwrap();
    for batch in [1, 7, 100] {
        assert_eq!(predict_batched(&model, &grid, &x, batch).unwrap(), full);
    }
}

#[test]
fn wrong_design_width_is_rejected() {
    let (model, coords, _) = interpolation_instance(7);
    let x = Matrix::zeros(coords.len(), 2);
    assert!(predict(&model, &coords, &x).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prediction_sd_never_exceeds_prior_sd(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(3..30);
        let coords = random_locations(&mut r, n, 5.0);
        let cov = global_kappa(random_mixture(&mut r, 4, 5.0), CorrelationFamily::Exponential);
        let z: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let model = fixed_model(
            cov, &coords, RegressionDesign::intercept(n).unwrap(), Matrix::column_vector(&z), vec![0.0],
        );
        let sites = random_locations(&mut r, 20, 6.0);
        let out = predict(&model, &sites, &ones(20)).unwrap();
        for (s, sd) in sites.iter().zip(&out.sds) {
            let p = model.params_at(s);
            prop_assert!(*sd >= 0.0);
            prop_assert!(*sd <= (p.sd * p.sd + p.tau2).sqrt() + 1e-8);
        }
    }
}
