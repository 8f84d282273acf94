//! Gaussian full and restricted log-likelihoods and generalized least
//! squares, all evaluated through a Cholesky factor of `Ω + D`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, SpdFactor};

/// Mean-model design matrix, one row per location.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionDesign {
    x: Matrix,
}

impl RegressionDesign {
    /// Wraps `x`, requiring full column rank and `p <= n`.
    pub fn new(x: Matrix) -> Result<Self> {
        if x.cols() == 0 {
            return Err(Error::RankDeficient("design has no columns".into()));
        }
        if x.cols() > x.rows() {
            return Err(Error::RankDeficient(format!(
                "design has {} columns but only {} rows",
                x.cols(),
                x.rows()
            )));
        }
        let kept = independent_columns(&x);
        if kept.len() < x.cols() {
            let dropped: Vec<usize> = (0..x.cols()).filter(|j| !kept.contains(j)).collect();
            return Err(Error::RankDeficient(format!(
                "design columns {dropped:?} are linearly dependent on earlier columns"
            )));
        }
        Ok(Self { x })
    }

    /// Intercept column followed by the given covariate columns.
    pub fn with_intercept(n: usize, covariates: &[Vec<f64>]) -> Result<Self> {
        for (j, c) in covariates.iter().enumerate() {
            if c.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "covariate {j} has {} values, expected {n}",
                    c.len()
                )));
            }
        }
        let p = covariates.len() + 1;
        let mut x = Matrix::zeros(n, p);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for (j, c) in covariates.iter().enumerate() {
                x[(i, j + 1)] = c[i];
            }
        }
        Self::new(x)
    }

    /// Intercept-only design.
    pub fn intercept(n: usize) -> Result<Self> {
        Self::with_intercept(n, &[])
    }

    /// Wraps without the rank check. Used for sub-designs whose rank is
    /// handled by the caller.
    pub(crate) fn unchecked(x: Matrix) -> Self {
        Self { x }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Rows in `idx`, with linearly dependent columns removed. Returns the
    /// reduced design and the indices of the dropped columns.
    pub fn subset(&self, idx: &[usize]) -> (RegressionDesign, Vec<usize>) {
        let sub = self.x.select_rows(idx);
        let kept = independent_columns(&sub);
        let dropped = (0..self.p()).filter(|j| !kept.contains(j)).collect();
        (Self::unchecked(sub.select_columns(&kept)), dropped)
    }

    /// `X β`.
    pub fn mean(&self, beta: &[f64]) -> Vec<f64> {
        self.x.mul_vec(beta)
    }
}

/// Greedy Gram–Schmidt column selection: a column is kept when its
/// residual against the kept ones is not negligible.
fn independent_columns(x: &Matrix) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for j in 0..x.cols() {
        let col = x.column(j);
        let norm0 = dot(&col, &col).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut r = col;
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
        }
        let norm = dot(&r, &r).sqrt();
        if norm > 1e-9 * norm0 {
            r.iter_mut().for_each(|v| *v /= norm);
            basis.push(r);
            kept.push(j);
        }
    }
    kept
}

fn check_dims(factor: &SpdFactor, x: &RegressionDesign, z: &Matrix) -> Result<()> {
    let n = factor.dim();
    if x.n() != n || z.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {n}x{n}, design has {} rows, data has {} rows",
            x.n(),
            z.rows()
        )));
    }
    if z.cols() == 0 {
        return Err(Error::DimensionMismatch(
            "data has no replicate columns".into(),
        ));
    }
    Ok(())
}

/// Whitened quantities shared by the restricted likelihood and GLS.
pub(crate) struct Whitened {
    /// `L^{-1} X`, one vector per design column.
    wx: Vec<Vec<f64>>,
    /// `L^{-1} z_j`, one vector per replicate.
    wz: Vec<Vec<f64>>,
    /// Cholesky factor of `X^T C^{-1} X`.
    info: SpdFactor,
}

impl Whitened {
    pub(crate) fn new(factor: &SpdFactor, x: &RegressionDesign, z: &Matrix) -> Result<Self> {
        check_dims(factor, x, z)?;
        let wx = factor.forward_columns(x.matrix());
        let wz = factor.forward_columns(z);
        let p = wx.len();
        let mut gram = Matrix::zeros(p, p);
        for a in 0..p {
            for b in 0..=a {
                gram[(a, b)] = dot(&wx[a], &wx[b]);
            }
        }
        let info = SpdFactor::strict(&gram).map_err(|_| {
            Error::RankDeficient(format!(
                "X^T C^-1 X is singular for the {}x{} design",
                x.n(),
                x.p()
            ))
        })?;
        Ok(Self { wx, wz, info })
    }

    fn cross(&self, v: &[f64]) -> Vec<f64> {
        self.wx.iter().map(|c| dot(c, v)).collect()
    }

    /// `z^T P z` for replicate `j`.
    fn quad_p(&self, j: usize) -> f64 {
        let v = &self.wz[j];
        let u = self.cross(v);
        let t = self.info.forward(&u);
        dot(v, v) - dot(&t, &t)
    }
}

/// `-1/2 log|C| - 1/2 (z - Xβ)^T C^{-1} (z - Xβ)`, summed over replicates.
pub fn full_loglik(
    beta: &[f64],
    factor: &SpdFactor,
    x: &RegressionDesign,
    z: &Matrix,
) -> Result<f64> {
    check_dims(factor, x, z)?;
    if beta.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries, design has {} columns",
            beta.len(),
            x.p()
        )));
    }
    let mean = x.mean(beta);
    let log_det = factor.log_det();
    let mut total = 0.0;
    for j in 0..z.cols() {
        let r: Vec<f64> = z.column(j).iter().zip(&mean).map(|(a, b)| a - b).collect();
        let w = factor.forward(&r);
        total += -0.5 * log_det - 0.5 * dot(&w, &w);
    }
    Ok(total)
}

/// Restricted log-likelihood
/// `-1/2 log|C| - 1/2 log|X^T C^{-1} X| - 1/2 z^T P z`, summed over replicates.
pub fn restricted_loglik(factor: &SpdFactor, x: &RegressionDesign, z: &Matrix) -> Result<f64> {
    let w = Whitened::new(factor, x, z)?;
    Ok(restricted_from(factor, &w))
}

pub(crate) fn restricted_from(factor: &SpdFactor, w: &Whitened) -> f64 {
    let det_term = factor.log_det() + w.info.log_det();
    (0..w.wz.len())
        .map(|j| -0.5 * det_term - 0.5 * w.quad_p(j))
        .sum()
}

/// Generalized least squares coefficients and their covariance
/// `(X^T C^{-1} X)^{-1}`. With replicates the coefficients are those of the
/// replicate-mean data.
pub fn gls_beta(
    factor: &SpdFactor,
    x: &RegressionDesign,
    z: &Matrix,
) -> Result<(Vec<f64>, Matrix)> {
    let w = Whitened::new(factor, x, z)?;
    let q = w.wz.len() as f64;
    let n = factor.dim();
    let mut mean_wz = vec![0.0; n];
    for col in &w.wz {
        mean_wz.iter_mut().zip(col).for_each(|(m, v)| *m += v / q);
    }
    let beta = w.info.solve(&w.cross(&mean_wz));
    let mut cov = w.info.inverse();
    cov.symmetrize_from_lower();
    Ok((beta, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ident(n: usize) -> SpdFactor {
        SpdFactor::new(&Matrix::identity(n)).unwrap()
    }

    #[test]
    fn full_loglik_examples() {
        let x = RegressionDesign::intercept(1).unwrap();
        let z = Matrix::column_vector(&[0.0]);
        assert_eq!(full_loglik(&[0.0], &ident(1), &x, &z).unwrap(), 0.0);

        let x = RegressionDesign::intercept(2).unwrap();
        let z = Matrix::column_vector(&[1.0, 1.0]);
        assert_relative_eq!(full_loglik(&[0.0], &ident(2), &x, &z).unwrap(), -1.0);
    }

    #[test]
    fn restricted_loglik_examples() {
        let x = RegressionDesign::intercept(2).unwrap();
        let z = Matrix::column_vector(&[0.0, 0.0]);
        assert_relative_eq!(
            restricted_loglik(&ident(2), &x, &z).unwrap(),
            -0.5 * 2f64.ln(),
            epsilon = 1e-15
        );
        // PX = 0: constant data gives the same value as zero data
        let z = Matrix::column_vector(&[3.5, 3.5]);
        assert_relative_eq!(
            restricted_loglik(&ident(2), &x, &z).unwrap(),
            -0.5 * 2f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn gls_reduces_to_sample_mean() {
        let x = RegressionDesign::intercept(4).unwrap();
        let z = Matrix::column_vector(&[1.0, 2.0, 4.0, 9.0]);
        let (beta, cov) = gls_beta(&ident(4), &x, &z).unwrap();
        assert_relative_eq!(beta[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(cov[(0, 0)], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn replicates_sum_and_average() {
        let x = RegressionDesign::with_intercept(3, &[vec![0.0, 1.0, 2.0]]).unwrap();
        let f = SpdFactor::new(
            &Matrix::from_rows(&[[2.0, 0.5, 0.1], [0.5, 2.0, 0.5], [0.1, 0.5, 2.0]]).unwrap(),
        )
        .unwrap();
        let z1 = [1.0, 0.3, -0.4];
        let z2 = [0.2, 1.1, 0.9];
        let both = Matrix::from_rows(&[[z1[0], z2[0]], [z1[1], z2[1]], [z1[2], z2[2]]]).unwrap();
        let l1 = restricted_loglik(&f, &x, &Matrix::column_vector(&z1)).unwrap();
        let l2 = restricted_loglik(&f, &x, &Matrix::column_vector(&z2)).unwrap();
        assert_relative_eq!(
            restricted_loglik(&f, &x, &both).unwrap(),
            l1 + l2,
            epsilon = 1e-13
        );

        let (b1, _) = gls_beta(&f, &x, &Matrix::column_vector(&z1)).unwrap();
        let (b2, _) = gls_beta(&f, &x, &Matrix::column_vector(&z2)).unwrap();
        let (b, _) = gls_beta(&f, &x, &both).unwrap();
        for k in 0..2 {
            assert_relative_eq!(b[k], 0.5 * (b1[k] + b2[k]), epsilon = 1e-13);
        }
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(
            RegressionDesign::new(x),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn subset_drops_locally_constant_columns() {
        let x = RegressionDesign::with_intercept(4, &[vec![1.0, 1.0, 2.0, 3.0]]).unwrap();
        let (sub, dropped) = x.subset(&[0, 1]);
        assert_eq!(sub.p(), 1);
        assert_eq!(dropped, vec![1]);
    }
}
