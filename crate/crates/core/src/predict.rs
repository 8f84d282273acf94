//! Kriging predictions from a fitted model.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::geometry::Location;
use crate::linalg::{dot, Matrix};

/// Predictive means (one column per replicate) and standard deviations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionResult {
    pub coords: Vec<Location>,
    /// `m x q`.
    pub means: Matrix,
    pub sds: Vec<f64>,
}

pub const DEFAULT_BATCH: usize = 1024;

/// Predictions at `coords` with mean covariates `design` (`m x p`).
pub fn predict(
    model: &FittedModel,
    coords: &[Location],
    design: &Matrix,
) -> Result<PredictionResult> {
    predict_batched(model, coords, design, DEFAULT_BATCH)
}

/// As [`predict`], holding at most `batch` cross-covariance vectors at once.
pub fn predict_batched(
    model: &FittedModel,
    coords: &[Location],
    design: &Matrix,
    batch: usize,
) -> Result<PredictionResult> {
    let m = coords.len();
    let p = model.beta.len();
    if design.rows() != m || design.cols() != p {
        return Err(Error::DimensionMismatch(format!(
            "prediction design is {}x{}, expected {m}x{p}",
            design.rows(),
            design.cols()
        )));
    }
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if coords.iter().any(|s| !s.x.is_finite() || !s.y.is_finite())
        || design.as_slice().iter().any(|v| !v.is_finite())
    {
        return Err(Error::InvalidArgument(
            "prediction inputs contain non-finite values".into(),
        ));
    }
    let cov = &model.covariance;
    let train = model.training_points();
    let resid = model.whitened_residuals();
    let q = resid.len();
    let mut means = Matrix::zeros(m, q);
    let mut sds = Vec::with_capacity(m);
    for start in (0..m).step_by(batch) {
        let end = (start + batch).min(m);
        let weights: Vec<(f64, Vec<f64>)> = coords[start..end]
            .iter()
            .map(|s| {
                let pt = cov.point(s);
                let k: Vec<f64> = train.iter().map(|t| cov.cov_points(&pt, t)).collect();
                (pt.sd * pt.sd + pt.tau2, model.factor().forward(&k))
            })
            .collect();
        for (off, (total_var, w)) in weights.iter().enumerate() {
            let i = start + off;
            let trend = dot(design.row(i), &model.beta);
            let row = means.row_mut(i);
            for (j, r) in resid.iter().enumerate() {
                row[j] = trend + dot(w, r);
            }
            sds.push((total_var - dot(w, w)).max(0.0).sqrt());
        }
    }
    Ok(PredictionResult {
        coords: coords.to_vec(),
        means,
        sds,
    })
}
