//! Plot-ready data: kernel ellipses, correlation maps and parameter
//! surfaces.

use nsgp_core::covariance::correlation_points;
use nsgp_core::{FittedModel, KernelMatrix, Location};
use serde::{Deserialize, Serialize};

use crate::dataset::Table;

pub const ELLIPSE_VERTICES: usize = 100;

/// `χ²₂(0.5) = 2 ln 2`.
pub fn half_probability_radius() -> f64 {
    (2.0 * std::f64::consts::LN_2).sqrt()
}

/// The 0.5-probability ellipse of a bivariate normal with covariance
/// `kernel`, as a closed polyline (the last vertex repeats the first).
pub fn ellipse_polygon(center: &Location, kernel: &KernelMatrix) -> Vec<[f64; 2]> {
    let r = half_probability_radius();
    let (a, b, c) = kernel.cholesky();
    (0..ELLIPSE_VERTICES)
        .map(|i| {
            let t = if i + 1 == ELLIPSE_VERTICES {
                0.0
            } else {
                std::f64::consts::TAU * i as f64 / (ELLIPSE_VERTICES - 1) as f64
            };
            let (u, v) = (r * t.cos(), r * t.sin());
            [center.x + a * u, center.y + b * u + c * v]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipseKind {
    Estimated,
    Stationary,
    True,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub kind: EllipseKind,
    pub component: usize,
    pub center: [f64; 2],
    pub kernel: [[f64; 2]; 2],
    pub polygon: Vec<[f64; 2]>,
}

impl Ellipse {
    pub fn new(
        kind: EllipseKind,
        component: usize,
        center: Location,
        kernel: KernelMatrix,
    ) -> Self {
        Self {
            kind,
            component,
            center: [center.x, center.y],
            kernel: kernel.to_array(),
            polygon: ellipse_polygon(&center, &kernel),
        }
    }
}

/// One ellipse per mixture component; a stationary model contributes a
/// single ellipse at its reference location.
pub fn model_ellipses(model: &FittedModel) -> Vec<Ellipse> {
    let kind = match model.kind {
        nsgp_core::ModelKind::Nonstationary => EllipseKind::Estimated,
        nsgp_core::ModelKind::Anisotropic => EllipseKind::Stationary,
    };
    let mc = &model.covariance.mc;
    mc.locations
        .iter()
        .zip(&mc.kernels)
        .enumerate()
        .map(|(k, (s, m))| Ellipse::new(kind, k, *s, *m))
        .collect()
}

/// Regular `n x n` grid over the bounding box of the model's data.
pub fn default_grid(model: &FittedModel, n: usize) -> Vec<Location> {
    let (lo, hi) = nsgp_core::geometry::bounding_box(&model.coords)
        .unwrap_or((Location::new(0.0, 0.0), Location::new(1.0, 1.0)));
    nsgp_core::geometry::regular_grid(lo, hi, n, n)
}

/// Estimated correlation between `reference` and each grid point.
pub fn correlation_map(model: &FittedModel, reference: &Location, grid: &[Location]) -> Table {
    let cov = &model.covariance;
    let r = cov.point(reference);
    let mut t = Table::new(vec!["x".into(), "y".into(), "correlation".into()]);
    for s in grid {
        let p = cov.point(s);
        t.rows
            .push(vec![s.x, s.y, correlation_points(cov.family, &r, &p)]);
    }
    t
}

/// Variance, nugget and kernel parameters over a grid.
pub fn parameter_surfaces(model: &FittedModel, grid: &[Location]) -> Table {
    let mut t = Table::new(
        ["x", "y", "sigma2", "tau2", "lam1", "lam2", "eta"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for s in grid {
        let p = model.params_at(s);
        let a = p.kernel.to_anisotropy();
        t.rows
            .push(vec![s.x, s.y, p.sd * p.sd, p.tau2, a.lam1, a.lam2, a.eta]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_kernel_gives_a_circle() {
        let c = 0.7;
        let k = KernelMatrix::isotropic(c).unwrap();
        let center = Location::new(1.0, -2.0);
        let poly = ellipse_polygon(&center, &k);
        assert_eq!(poly.len(), ELLIPSE_VERTICES);
        assert_eq!(poly[0], poly[ELLIPSE_VERTICES - 1]);
        let want = (c * 2.0 * std::f64::consts::LN_2).sqrt();
        for p in &poly {
            let r = ((p[0] - center.x).powi(2) + (p[1] - center.y).powi(2)).sqrt();
            assert!((r - want).abs() < 1e-12, "{r} vs {want}");
        }
    }

    #[test]
    fn polygon_vertices_lie_on_the_quadratic_level_set() {
        let k = KernelMatrix::new(2.0, 0.6, 0.5).unwrap();
        let center = Location::new(0.0, 0.0);
        for p in ellipse_polygon(&center, &k) {
            let q = k.inv_quad(p[0], p[1]);
            assert!((q - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        }
    }
}
