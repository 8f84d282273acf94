#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nsgp_core::{
    build_kernel_matrix, covariance::GlobalOverrides, covariance::SpatiallyVarying,
    AnisotropyParams, CorrelationFamily, KernelMatrix, Location, Matrix, MixtureComponentSet,
    NsCovariance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn random_locations(rng: &mut impl Rng, n: usize, side: f64) -> Vec<Location> {
    (0..n)
        .map(|_| Location::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect()
}

pub fn random_kernel(rng: &mut impl Rng, lo: f64, hi: f64) -> KernelMatrix {
    let p = AnisotropyParams::new(
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
        rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
    )
    .unwrap();
    build_kernel_matrix(&p).unwrap()
}

/// Random mixture with spatially varying variance and nugget.
pub fn random_mixture(rng: &mut impl Rng, k: usize, side: f64) -> MixtureComponentSet {
    let locations = random_locations(rng, k, side);
    let kernels = (0..k).map(|_| random_kernel(rng, 0.05, 2.0)).collect();
    let variances = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    let nuggets = (0..k).map(|_| rng.random_range(0.0..0.5)).collect();
    let smooth = (0..k).map(|_| rng.random_range(0.2..4.0)).collect();
    let lambda_w = rng.random_range(0.1..3.0);
    MixtureComponentSet::new(
        locations,
        kernels,
        variances,
        nuggets,
        Some(smooth),
        lambda_w,
    )
    .unwrap()
}

pub fn varying(mc: MixtureComponentSet, family: CorrelationFamily) -> NsCovariance {
    NsCovariance::new(
        mc,
        family,
        SpatiallyVarying {
            variance: true,
            nugget: true,
            smoothness: true,
        },
        GlobalOverrides::default(),
    )
    .unwrap()
}

/// Varying variance and nugget with one smoothness shared by all locations.
pub fn global_kappa(mc: MixtureComponentSet, family: CorrelationFamily) -> NsCovariance {
    NsCovariance::new(
        mc,
        family,
        SpatiallyVarying {
            variance: true,
            nugget: true,
            smoothness: false,
        },
        GlobalOverrides {
            kappa: Some(1.5),
            ..GlobalOverrides::default()
        },
    )
    .unwrap()
}

/// Single-component stationary covariance with global variance and nugget.
pub fn stationary(
    kernel: KernelMatrix,
    sigma2: f64,
    tau2: f64,
    family: CorrelationFamily,
    kappa: Option<f64>,
) -> NsCovariance {
    let mc = MixtureComponentSet::uniform(
        vec![Location::new(0.0, 0.0)],
        kernel,
        sigma2,
        tau2,
        kappa,
        1.0,
    )
    .unwrap();
    NsCovariance::new(
        mc,
        family,
        SpatiallyVarying::default(),
        GlobalOverrides {
            sigma2: Some(sigma2),
            tau2: Some(tau2),
            kappa,
        },
    )
    .unwrap()
}

/// `Ω + D` as a dense nalgebra matrix.
pub fn total_cov(coords: &[Location], cov: &NsCovariance) -> DMatrix<f64> {
    let (omega, d) = nsgp_core::covariance_matrix(coords, cov);
    let mut c = to_na(&omega);
    for (i, v) in d.iter().enumerate() {
        c[(i, i)] += v;
    }
    c
}

/// Restricted log-likelihood written out with explicit inverses.
pub fn dense_restricted(c: &DMatrix<f64>, x: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let ci = c.clone().try_inverse().unwrap();
    let xtcx = x.transpose() * &ci * x;
    let xtcx_inv = xtcx.clone().try_inverse().unwrap();
    let p = &ci - &ci * x * xtcx_inv * x.transpose() * &ci;
    let quad = (z.transpose() * p * z)[(0, 0)];
    -0.5 * c.determinant().ln() - 0.5 * xtcx.determinant().ln() - 0.5 * quad
}

/// Gaussian log-likelihood of the contrasts `A z`, up to the constant
/// `-(n-p)/2 log 2π`, where `A` is any full-row-rank matrix with `A X = 0`.
pub fn contrast_loglik(a: &DMatrix<f64>, c: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let v = a * c * a.transpose();
    let y = a * z;
    let vi = v.clone().try_inverse().unwrap();
    -0.5 * v.determinant().ln() - 0.5 * (y.transpose() * vi * y)[(0, 0)]
}

/// A random `(n-p) x n` matrix annihilating the columns of `x`.
pub fn random_contrasts(rng: &mut impl Rng, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let h = x * (x.transpose() * x).try_inverse().unwrap() * x.transpose();
    let m = DMatrix::identity(n, n) - h;
    let b = DMatrix::from_fn(n - p, n, |_, _| rng.random_range(-1.0..1.0));
    b * m
}

/// A model with known covariance and coefficients, bypassing estimation.
pub fn fixed_model(
    cov: NsCovariance,
    coords: &[Location],
    design: nsgp_core::RegressionDesign,
    data: Matrix,
    beta: Vec<f64>,
) -> nsgp_core::FittedModel {
    let config = nsgp_core::default_config(coords, &design, &data, &cov.mc.locations, 1.0).unwrap();
    let p = beta.len();
    let state = nsgp_core::ModelState {
        kind: nsgp_core::ModelKind::Nonstationary,
        covariance: cov,
        local_fits: Vec::new(),
        global: nsgp_core::GlobalEstimates::default(),
        beta,
        beta_cov: Matrix::identity(p),
        coords: coords.to_vec(),
        design,
        data,
        config,
        warnings: Vec::new(),
    };
    nsgp_core::FittedModel::from_state(state).unwrap()
}
