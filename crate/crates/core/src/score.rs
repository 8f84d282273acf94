//! Prediction scores.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::special::{norm_cdf, norm_pdf};

/// Mean squared prediction error over all entries.
pub fn mspe(holdout: &Matrix, means: &Matrix) -> Result<f64> {
    same_shape(holdout, means)?;
    let n = holdout.as_slice().len() as f64;
    Ok(holdout
        .as_slice()
        .iter()
        .zip(means.as_slice())
        .map(|(z, m)| (z - m) * (z - m))
        .sum::<f64>()
        / n)
}

/// CRPS of a Gaussian forecast, oriented so that larger is better:
/// `σ [1/√π - 2φ(u) - u(2Φ(u) - 1)]` with `u = (z - μ)/σ`.
pub fn crps_gaussian(z: f64, mu: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "predictive standard deviation must be positive, got {sd}"
        )));
    }
    let u = (z - mu) / sd;
    Ok(sd
        * (1.0 / core::f64::consts::PI.sqrt() - 2.0 * norm_pdf(u) - u * (2.0 * norm_cdf(u) - 1.0)))
}

/// Average CRPS over all entries; `sds` has one entry per row.
pub fn mean_crps(holdout: &Matrix, means: &Matrix, sds: &[f64]) -> Result<f64> {
    same_shape(holdout, means)?;
    if sds.len() != holdout.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} standard deviations for {} rows",
            sds.len(),
            holdout.rows()
        )));
    }
    let mut total = 0.0;
    for (i, &sd) in sds.iter().enumerate() {
        for (z, m) in holdout.row(i).iter().zip(means.row(i)) {
            total += crps_gaussian(*z, *m, sd)?;
        }
    }
    Ok(total / holdout.as_slice().len() as f64)
}

fn same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} observations against {}x{} predictions",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.as_slice().is_empty() {
        return Err(Error::InvalidArgument("nothing to score".into()));
    }
    Ok(())
}
