//! Nonstationary spatial Gaussian process models built from the closed-form
//! convolution-kernel covariance.
//!
//! Spatially varying anisotropy, variance and nugget are represented by a
//! small set of mixture components whose parameters are blended with
//! Gaussian weights. Each component is estimated by restricted maximum
//! likelihood on the observations within a fixed radius, after which the
//! remaining global variance parameters and the mean coefficients are
//! estimated on the full data set.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! interface and parallel execution live in the `nsgp` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod covariance;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod likelihood;
pub mod linalg;
pub mod optimize;
pub mod predict;
pub mod score;
pub mod simulate;
pub mod special;

pub use covariance::{
    correlation, covariance_matrix, nonstationary_cov, stationary_cov, CorrelationFamily,
    NsCovariance, ParamSource, PointParams, StationaryParams,
};
pub use error::{Error, Result};
pub use fit::{
    default_config, fit_anisotropic, fit_nonstationary, fit_nonstationary_with, local_fit,
    ComponentRunner, FitConfig, FitEvent, FitWarning, FittedModel, GlobalEstimates, GlobalValues,
    LocalFitRecord, LocalValues, ModelKind, ModelState, Sequential,
};
pub use geometry::{
    build_kernel_matrix, evaluate_param_field, mc_n_counts, mixture_weights, scaled_distance,
    AnisotropyParams, KernelMatrix, Location, MixtureComponentSet, ParamField,
};
pub use likelihood::{full_loglik, gls_beta, restricted_loglik, RegressionDesign};
pub use linalg::{Matrix, SpdFactor};
pub use optimize::OptimOptions;
pub use predict::{predict, predict_batched, PredictionResult};
pub use score::{crps_gaussian, mean_crps, mspe};
pub use simulate::{
    glm_kernel_at, glm_kernels, simulate_field, Domain, KernelGlmCoefs, KernelMode, SimOutput,
    SimSpec,
};
