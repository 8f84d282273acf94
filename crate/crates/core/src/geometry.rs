//! Planar locations, 2x2 kernel matrices, mixture weights and the
//! spatially varying parameter fields they induce.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// A point in the plane. Distances are planar Euclidean on the raw
/// coordinates, including for longitude/latitude data.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Like [`Location::new`] but rejects NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::InvalidArgument(format!(
                "location ({x}, {y}) is not finite"
            )))
        }
    }

    #[inline]
    pub fn dist2(&self, other: &Location) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Location) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Spectral parameterization of a kernel matrix: eigenvalues (squared
/// ranges) and a rotation angle in `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnisotropyParams {
    pub lam1: f64,
    pub lam2: f64,
    pub eta: f64,
}

impl AnisotropyParams {
    pub fn new(lam1: f64, lam2: f64, eta: f64) -> Result<Self> {
        let p = Self { lam1, lam2, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lam1 > 0.0 && self.lam1.is_finite())
            || !(self.lam2 > 0.0 && self.lam2.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues must be positive and finite, got ({}, {})",
                self.lam1, self.lam2
            )));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!(
                "rotation angle {} outside [0, pi/2]",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Symmetric positive-definite 2x2 matrix `[[s11, s12], [s12, s22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")
)]
pub struct KernelMatrix {
    s11: f64,
    s12: f64,
    s22: f64,
}

impl KernelMatrix {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Result<Self> {
        let det = s11 * s22 - s12 * s12;
        if !(s11 > 0.0) || !(det > 0.0) || !s22.is_finite() || !s12.is_finite() || !s11.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "kernel matrix [[{s11}, {s12}], [{s12}, {s22}]] is not positive definite"
            )));
        }
        Ok(Self { s11, s12, s22 })
    }

    /// `c * I`.
    pub fn isotropic(c: f64) -> Result<Self> {
        Self::new(c, 0.0, c)
    }

    #[inline]
    pub fn s11(&self) -> f64 {
        self.s11
    }
    #[inline]
    pub fn s12(&self) -> f64 {
        self.s12
    }
    #[inline]
    pub fn s22(&self) -> f64 {
        self.s22
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    /// `x^T M^{-1} x` for `x = (dx, dy)`.
    #[inline]
    pub fn inv_quad(&self, dx: f64, dy: f64) -> f64 {
        (self.s22 * dx * dx - 2.0 * self.s12 * dx * dy + self.s11 * dy * dy) / self.det()
    }

    /// Entry-wise average `(self + other) / 2`.
    #[inline]
    pub fn midpoint(&self, other: &KernelMatrix) -> KernelMatrix {
        KernelMatrix {
            s11: 0.5 * (self.s11 + other.s11),
            s12: 0.5 * (self.s12 + other.s12),
            s22: 0.5 * (self.s22 + other.s22),
        }
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.s11 + self.s22);
        let disc = (0.25 * (self.s11 - self.s22).powi(2) + self.s12 * self.s12).sqrt();
        (half_tr + disc, half_tr - disc)
    }

    /// Recovers a spectral parameterization with the angle in `[0, pi/2]`.
    /// Eigenvalue labels are chosen so that the angle lands in range.
    pub fn to_anisotropy(&self) -> AnisotropyParams {
        let (big, small) = self.eigenvalues();
        // angle of the eigenvector of the larger eigenvalue, in [0, pi)
        let mut theta = 0.5 * libm::atan2(2.0 * self.s12, self.s11 - self.s22);
        if theta < 0.0 {
            theta += core::f64::consts::PI;
        }
        if theta <= FRAC_PI_2 {
            AnisotropyParams {
                lam1: big,
                lam2: small,
                eta: theta,
            }
        } else {
            AnisotropyParams {
                lam1: small,
                lam2: big,
                eta: (theta - FRAC_PI_2).min(FRAC_PI_2),
            }
        }
    }

    /// Lower Cholesky factor `[[a, 0], [b, c]]` as `(a, b, c)`.
    pub fn cholesky(&self) -> (f64, f64, f64) {
        let a = self.s11.sqrt();
        let b = self.s12 / a;
        let c = (self.s22 - b * b).sqrt();
        (a, b, c)
    }

    pub fn to_array(&self) -> [[f64; 2]; 2] {
        [[self.s11, self.s12], [self.s12, self.s22]]
    }
}

impl TryFrom<[[f64; 2]; 2]> for KernelMatrix {
    type Error = Error;
    fn try_from(m: [[f64; 2]; 2]) -> Result<Self> {
        if (m[0][1] - m[1][0]).abs() > 1e-12 * (m[0][1].abs() + m[1][0].abs()).max(1.0) {
            return Err(Error::InvalidParameter(
                "kernel matrix must be symmetric".into(),
            ));
        }
        KernelMatrix::new(m[0][0], m[0][1], m[1][1])
    }
}

impl From<KernelMatrix> for [[f64; 2]; 2] {
    fn from(k: KernelMatrix) -> Self {
        k.to_array()
    }
}

/// `R(eta) diag(lam1, lam2) R(eta)^T` with `R` the counter-clockwise rotation.
pub fn build_kernel_matrix(p: &AnisotropyParams) -> Result<KernelMatrix> {
    p.validate()?;
    let (s, c) = libm::sincos(p.eta);
    let s11 = p.lam1 * c * c + p.lam2 * s * s;
    let s22 = p.lam1 * s * s + p.lam2 * c * c;
    let s12 = (p.lam1 - p.lam2) * c * s;
    KernelMatrix::new(s11, s12, s22)
}

/// `(s - s')^T [(A + B)/2]^{-1} (s - s')`.
pub fn scaled_distance(s: &Location, s2: &Location, a: &KernelMatrix, b: &KernelMatrix) -> f64 {
    let avg = a.midpoint(b);
    avg.inv_quad(s.x - s2.x, s.y - s2.y)
}

/// Mixture component anchors and their parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixtureComponentSet {
    pub locations: Vec<Location>,
    pub kernels: Vec<KernelMatrix>,
    pub variances: Vec<f64>,
    pub nuggets: Vec<f64>,
    /// Present only for families with a smoothness parameter.
    pub smoothnesses: Option<Vec<f64>>,
    pub lambda_w: f64,
}

impl MixtureComponentSet {
    pub fn new(
        locations: Vec<Location>,
        kernels: Vec<KernelMatrix>,
        variances: Vec<f64>,
        nuggets: Vec<f64>,
        smoothnesses: Option<Vec<f64>>,
        lambda_w: f64,
    ) -> Result<Self> {
        let mc = Self {
            locations,
            kernels,
            variances,
            nuggets,
            smoothnesses,
            lambda_w,
        };
        mc.validate()?;
        Ok(mc)
    }

    /// Components sharing one set of parameters.
    pub fn uniform(
        locations: Vec<Location>,
        kernel: KernelMatrix,
        variance: f64,
        nugget: f64,
        smoothness: Option<f64>,
        lambda_w: f64,
    ) -> Result<Self> {
        let k = locations.len();
        Self::new(
            locations,
            alloc::vec![kernel; k],
            alloc::vec![variance; k],
            alloc::vec![nugget; k],
            smoothness.map(|v| alloc::vec![v; k]),
            lambda_w,
        )
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.locations.len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "at least one mixture component is required".into(),
            ));
        }
        let lens_ok = self.kernels.len() == k
            && self.variances.len() == k
            && self.nuggets.len() == k
            && self.smoothnesses.as_ref().is_none_or(|s| s.len() == k);
        if !lens_ok {
            return Err(Error::DimensionMismatch(
                "mixture component parameter lists differ in length".into(),
            ));
        }
        if !(self.lambda_w > 0.0 && self.lambda_w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda_w must be positive, got {}",
                self.lambda_w
            )));
        }
        if self
            .variances
            .iter()
            .chain(&self.nuggets)
            .any(|v| !(*v >= 0.0))
        {
            return Err(Error::InvalidParameter(
                "component variances and nuggets must be non-negative".into(),
            ));
        }
        if let Some(s) = &self.smoothnesses {
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidParameter(
                    "component smoothness must be positive".into(),
                ));
            }
        }
        for kern in &self.kernels {
            KernelMatrix::new(kern.s11, kern.s12, kern.s22)?;
        }
        Ok(())
    }
}

/// Normalized Gaussian weights `w_k(s) ∝ exp(-|s - b_k|^2 / (2 lambda_w))`,
/// computed with the maximum exponent subtracted.
pub fn mixture_weights(s: &Location, mc: &MixtureComponentSet) -> Vec<f64> {
    weights_for(s, &mc.locations, mc.lambda_w)
}

pub(crate) fn weights_for(s: &Location, anchors: &[Location], lambda_w: f64) -> Vec<f64> {
    let mut w: Vec<f64> = anchors
        .iter()
        .map(|b| -s.dist2(b) / (2.0 * lambda_w))
        .collect();
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in &mut w {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Parameters at an arbitrary location: weighted averages of the
/// component values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamField {
    pub kernel: KernelMatrix,
    pub variance: f64,
    pub nugget: f64,
    pub smoothness: Option<f64>,
}

pub fn evaluate_param_field(s: &Location, mc: &MixtureComponentSet) -> ParamField {
    let w = mixture_weights(s, mc);
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    let (mut var, mut nug) = (0.0, 0.0);
    for (k, wk) in w.iter().enumerate() {
        let kern = &mc.kernels[k];
        s11 += wk * kern.s11;
        s12 += wk * kern.s12;
        s22 += wk * kern.s22;
        var += wk * mc.variances[k];
        nug += wk * mc.nuggets[k];
    }
    let smoothness = mc
        .smoothnesses
        .as_ref()
        .map(|ks| w.iter().zip(ks).map(|(wk, v)| wk * v).sum());
    ParamField {
        // a convex combination of positive-definite matrices
        kernel: KernelMatrix { s11, s12, s22 },
        variance: var,
        nugget: nug,
        smoothness,
    }
}

/// Number of observations within `fit_radius` (inclusive) of each component.
pub fn mc_n_counts(coords: &[Location], mc_locations: &[Location], fit_radius: f64) -> Vec<usize> {
    let r2 = fit_radius * fit_radius;
    mc_locations
        .iter()
        .map(|b| coords.iter().filter(|s| s.dist2(b) <= r2).count())
        .collect()
}

/// Indices of the observations within `fit_radius` of `center`.
pub fn neighborhood(coords: &[Location], center: &Location, fit_radius: f64) -> Vec<usize> {
    let r2 = fit_radius * fit_radius;
    coords
        .iter()
        .enumerate()
        .filter(|(_, s)| s.dist2(center) <= r2)
        .map(|(i, _)| i)
        .collect()
}

/// `(0.5 * min_{k != k'} |b_k - b_k'|)^2`, or 1 when there is a single
/// component (the weights are then identically 1).
pub fn default_lambda_w(mc_locations: &[Location]) -> f64 {
    let mut min = f64::INFINITY;
    for (i, a) in mc_locations.iter().enumerate() {
        for b in &mc_locations[i + 1..] {
            let d = a.dist(b);
            if d > 0.0 && d < min {
                min = d;
            }
        }
    }
    if min.is_finite() {
        (0.5 * min).powi(2)
    } else {
        1.0
    }
}

pub fn max_interpoint_distance(coords: &[Location]) -> f64 {
    let mut max2: f64 = 0.0;
    for (i, a) in coords.iter().enumerate() {
        for b in &coords[i + 1..] {
            max2 = max2.max(a.dist2(b));
        }
    }
    max2.sqrt()
}

/// Axis-aligned bounding box `(min, max)`.
pub fn bounding_box(coords: &[Location]) -> Option<(Location, Location)> {
    let first = coords.first()?;
    let (mut lo, mut hi) = (*first, *first);
    for s in coords {
        lo.x = lo.x.min(s.x);
        lo.y = lo.y.min(s.y);
        hi.x = hi.x.max(s.x);
        hi.y = hi.y.max(s.y);
    }
    Some((lo, hi))
}

/// `n_side x n_side` cell-centred grid over a rectangle; x varies fastest.
pub fn cell_centred_grid(lo: Location, hi: Location, n_side: usize) -> Vec<Location> {
    let n = n_side as f64;
    let (wx, wy) = ((hi.x - lo.x) / n, (hi.y - lo.y) / n);
    let mut out = Vec::with_capacity(n_side * n_side);
    for j in 0..n_side {
        for i in 0..n_side {
            out.push(Location::new(
                lo.x + (i as f64 + 0.5) * wx,
                lo.y + (j as f64 + 0.5) * wy,
            ));
        }
    }
    out
}

/// Regular grid including the rectangle's edges; x varies fastest.
pub fn regular_grid(lo: Location, hi: Location, nx: usize, ny: usize) -> Vec<Location> {
    let step = |a: f64, b: f64, n: usize, i: usize| {
        if n <= 1 {
            a
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Location::new(
                step(lo.x, hi.x, nx, i),
                step(lo.y, hi.y, ny, j),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_4;

    #[test]
    fn kernel_matrix_examples() {
        let k = build_kernel_matrix(&AnisotropyParams::new(2.0, 3.0, 0.0).unwrap()).unwrap();
        assert_eq!(k.to_array(), [[2.0, 0.0], [0.0, 3.0]]);

        let k = build_kernel_matrix(&AnisotropyParams::new(1.7, 1.7, 1.1).unwrap()).unwrap();
        assert_relative_eq!(k.s11(), 1.7, epsilon = 1e-15);
        assert_relative_eq!(k.s22(), 1.7, epsilon = 1e-15);
        assert_relative_eq!(k.s12(), 0.0, epsilon = 1e-15);

        // [[c, -s], [s, c]] diag(2, 1) [[c, s], [-s, c]] with c = s = 1/sqrt(2)
        let k = build_kernel_matrix(&AnisotropyParams::new(2.0, 1.0, FRAC_PI_4).unwrap()).unwrap();
        assert_relative_eq!(k.s11(), 1.5, epsilon = 1e-14);
        assert_relative_eq!(k.s12(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(k.s22(), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn invalid_anisotropy_is_rejected() {
        assert!(AnisotropyParams::new(0.0, 1.0, 0.1).is_err());
        assert!(AnisotropyParams::new(1.0, -1.0, 0.1).is_err());
        assert!(AnisotropyParams::new(1.0, 1.0, 1.6).is_err());
        assert!(AnisotropyParams::new(1.0, 1.0, -0.01).is_err());
    }

    #[test]
    fn anisotropy_round_trip() {
        for &(l1, l2, eta) in &[
            (2.0, 0.5, 0.3),
            (0.5, 2.0, 1.2),
            (3.0, 1.0, 0.0),
            (1.0, 4.0, FRAC_PI_2),
        ] {
            let p = AnisotropyParams::new(l1, l2, eta).unwrap();
            let k = build_kernel_matrix(&p).unwrap();
            let back = build_kernel_matrix(&k.to_anisotropy()).unwrap();
            assert_relative_eq!(back.s11(), k.s11(), epsilon = 1e-12);
            assert_relative_eq!(back.s12(), k.s12(), epsilon = 1e-12);
            assert_relative_eq!(back.s22(), k.s22(), epsilon = 1e-12);
        }
    }

    #[test]
    fn scaled_distance_examples() {
        let id = KernelMatrix::isotropic(1.0).unwrap();
        let s = Location::new(1.0, 2.0);
        assert_eq!(scaled_distance(&s, &s, &id, &id), 0.0);
        let t = Location::new(4.0, 6.0);
        assert_relative_eq!(scaled_distance(&s, &t, &id, &id), 25.0, epsilon = 1e-12);

        // average of diag(1,4) and diag(3,2) is diag(2,3)
        let a = KernelMatrix::new(1.0, 0.0, 4.0).unwrap();
        let b = KernelMatrix::new(3.0, 0.0, 2.0).unwrap();
        let q = scaled_distance(&Location::new(1.0, 1.0), &Location::new(0.0, 0.0), &a, &b);
        assert_relative_eq!(q, 5.0 / 6.0, epsilon = 1e-14);
    }

    fn two_components(lambda_w: f64, d: f64) -> MixtureComponentSet {
        MixtureComponentSet::new(
            vec![Location::new(0.0, 0.0), Location::new(d, 0.0)],
            vec![
                KernelMatrix::isotropic(1.0).unwrap(),
                KernelMatrix::isotropic(4.0).unwrap(),
            ],
            vec![1.0, 3.0],
            vec![0.1, 0.1],
            None,
            lambda_w,
        )
        .unwrap()
    }

    #[test]
    fn weights_examples() {
        let one = MixtureComponentSet::uniform(
            vec![Location::new(3.0, 3.0)],
            KernelMatrix::isotropic(1.0).unwrap(),
            1.0,
            0.0,
            None,
            0.5,
        )
        .unwrap();
        assert_eq!(mixture_weights(&Location::new(-10.0, 2.0), &one), vec![1.0]);

        let mc = two_components(1.0, 2.0);
        let w = mixture_weights(&Location::new(1.0, 5.0), &mc);
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-15);

        // b_2 at distance sqrt(2 lambda_w): unnormalized (1, e^-1)
        let lw = 0.8;
        let mc = two_components(lw, (2.0 * lw).sqrt());
        let w = mixture_weights(&Location::new(0.0, 0.0), &mc);
        let e1 = (-1.0f64).exp();
        assert_relative_eq!(w[0], 1.0 / (1.0 + e1), epsilon = 1e-14);
        assert_relative_eq!(w[1], e1 / (1.0 + e1), epsilon = 1e-14);
        assert_relative_eq!(w[0], 0.7311, epsilon = 1e-4);
    }

    #[test]
    fn weights_survive_distant_queries() {
        let mc = two_components(1e-3, 2.0);
        let w = mixture_weights(&Location::new(1e4, 0.0), &mc);
        assert!(w.iter().all(|v| v.is_finite()));
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(w[1], 1.0);
    }

    #[test]
    fn param_field_examples() {
        let mc = MixtureComponentSet::uniform(
            vec![
                Location::new(0.0, 0.0),
                Location::new(1.0, 1.0),
                Location::new(2.0, 0.0),
            ],
            KernelMatrix::new(2.0, 0.3, 1.0).unwrap(),
            1.5,
            0.2,
            Some(0.7),
            0.4,
        )
        .unwrap();
        let f = evaluate_param_field(&Location::new(0.3, 2.0), &mc);
        assert_relative_eq!(f.kernel.s11(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.kernel.s12(), 0.3, epsilon = 1e-14);
        assert_relative_eq!(f.variance, 1.5, epsilon = 1e-14);
        assert_relative_eq!(f.nugget, 0.2, epsilon = 1e-14);
        assert_relative_eq!(f.smoothness.unwrap(), 0.7, epsilon = 1e-14);

        let mc = two_components(1.0, 2.0);
        let f = evaluate_param_field(&Location::new(1.0, -3.0), &mc);
        assert_relative_eq!(f.variance, 2.0, epsilon = 1e-14);

        let lw = 0.8;
        let mc = two_components(lw, (2.0 * lw).sqrt());
        let w = mixture_weights(&Location::new(0.0, 0.0), &mc);
        let f = evaluate_param_field(&Location::new(0.0, 0.0), &mc);
        let expected = w[0] * 1.0 + w[1] * 4.0;
        assert_relative_eq!(f.kernel.s11(), expected, epsilon = 1e-14);
        assert_relative_eq!(f.kernel.s22(), expected, epsilon = 1e-14);
        // 1 + 3 e^-1 / (1 + e^-1); 1.8067 when computed from 4-digit weights
        assert_relative_eq!(
            expected,
            1.0 + 3.0 / (1.0 + core::f64::consts::E),
            epsilon = 1e-14
        );
        assert_relative_eq!(expected, 1.8067, epsilon = 2e-4);
    }

    #[test]
    fn counts_examples() {
        let mcl = vec![Location::new(0.0, 0.0), Location::new(5.0, 5.0)];
        assert_eq!(mc_n_counts(&[], &mcl, 1.0), vec![0, 0]);
        let coords = vec![
            Location::new(0.0, 0.0),
            Location::new(1.0, 0.0),
            Location::new(4.0, 5.0),
        ];
        // boundary is inclusive
        assert_eq!(mc_n_counts(&coords, &mcl, 1.0), vec![2, 1]);
    }

    #[test]
    fn default_lambda_w_rule() {
        let grid = vec![
            Location::new(0.0, 0.0),
            Location::new(2.0, 0.0),
            Location::new(0.0, 2.0),
            Location::new(2.0, 2.0),
        ];
        assert_relative_eq!(default_lambda_w(&grid), 1.0);
        assert_eq!(default_lambda_w(&grid[..1]), 1.0);
    }

    #[test]
    fn grids() {
        let g = cell_centred_grid(Location::new(0.0, 0.0), Location::new(5.0, 5.0), 3);
        assert_eq!(g.len(), 9);
        assert_relative_eq!(g[0].x, 5.0 / 6.0);
        assert_relative_eq!(g[4].y, 2.5);
        let r = regular_grid(Location::new(0.0, 0.0), Location::new(5.0, 5.0), 25, 25);
        assert_eq!(r.len(), 625);
        assert_eq!(r[624], Location::new(5.0, 5.0));
    }
}
