//! Correlation families, the stationary anisotropic covariance, and the
//! closed-form nonstationary covariance with its matrix assembly.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{
    build_kernel_matrix, evaluate_param_field, AnisotropyParams, KernelMatrix, Location,
    MixtureComponentSet,
};
use crate::linalg::Matrix;
use crate::special::matern_correlation;

/// Upper bound on the smoothness parameter.
pub const MAX_SMOOTHNESS: f64 = 30.0;

/// Isotropic unit-range correlation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CorrelationFamily {
    Exponential,
    Gaussian,
    Matern,
    Cauchy,
    Spherical,
    Circular,
    Cubic,
    Wave,
}

impl CorrelationFamily {
    pub const ALL: [CorrelationFamily; 8] = [
        Self::Exponential,
        Self::Gaussian,
        Self::Matern,
        Self::Cauchy,
        Self::Spherical,
        Self::Circular,
        Self::Cubic,
        Self::Wave,
    ];

    /// Whether the family carries a smoothness parameter.
    pub fn has_smoothness(self) -> bool {
        matches!(self, Self::Matern | Self::Cauchy)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Gaussian => "gaussian",
            Self::Matern => "matern",
            Self::Cauchy => "cauchy",
            Self::Spherical => "spherical",
            Self::Circular => "circular",
            Self::Cubic => "cubic",
            Self::Wave => "wave",
        }
    }
}

impl fmt::Display for CorrelationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorrelationFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown correlation family `{s}`")))
    }
}

/// Correlation at unit-range lag `h >= 0`.
pub fn correlation(family: CorrelationFamily, h: f64, kappa: Option<f64>) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lag must be non-negative, got {h}"
        )));
    }
    let kappa = if family.has_smoothness() {
        match kappa {
            Some(k) if k > 0.0 && k.is_finite() => k,
            Some(k) => {
                return Err(Error::InvalidParameter(format!(
                    "{family} smoothness must be positive, got {k}"
                )))
            }
            None => {
                return Err(Error::InvalidParameter(format!(
                    "{family} correlation requires a smoothness parameter"
                )))
            }
        }
    } else {
        0.0
    };
    Ok(correlation_unchecked(family, h, kappa))
}

/// Correlation without argument validation; `kappa` is ignored by families
/// without a smoothness parameter.
#[inline]
pub(crate) fn correlation_unchecked(family: CorrelationFamily, h: f64, kappa: f64) -> f64 {
    match family {
        CorrelationFamily::Exponential => (-h).exp(),
        CorrelationFamily::Gaussian => (-h * h).exp(),
        CorrelationFamily::Matern => matern_correlation(h, kappa),
        CorrelationFamily::Cauchy => (1.0 + h * h).powf(-kappa),
        CorrelationFamily::Spherical => {
            if h < 1.0 {
                1.0 - 1.5 * h + 0.5 * h * h * h
            } else {
                0.0
            }
        }
        CorrelationFamily::Circular => {
            if h < 1.0 {
                (2.0 / PI) * (h.acos() - h * (1.0 - h * h).sqrt())
            } else {
                0.0
            }
        }
        CorrelationFamily::Cubic => {
            if h < 1.0 {
                let h2 = h * h;
                let h3 = h2 * h;
                let h5 = h3 * h2;
                1.0 - (7.0 * h2 - 8.75 * h3 + 3.5 * h5 - 0.75 * h5 * h2)
            } else {
                0.0
            }
        }
        CorrelationFamily::Wave => {
            if h == 0.0 {
                1.0
            } else {
                h.sin() / h
            }
        }
    }
}

/// Parameters of the stationary anisotropic model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryParams {
    pub aniso: AnisotropyParams,
    pub sigma2: f64,
    pub tau2: f64,
    pub kappa: Option<f64>,
}

impl StationaryParams {
    pub fn validate(&self) -> Result<()> {
        self.aniso.validate()?;
        if !(self.sigma2 >= 0.0) || !(self.tau2 >= 0.0) {
            return Err(Error::InvalidParameter(
                "variances must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// `σ² g(|Σ^{-1/2}(s - s')|)`, without the nugget.
pub fn stationary_cov(
    s: &Location,
    s2: &Location,
    p: &StationaryParams,
    family: CorrelationFamily,
) -> Result<f64> {
    p.validate()?;
    let kernel = build_kernel_matrix(&p.aniso)?;
    let q = kernel.inv_quad(s.x - s2.x, s.y - s2.y);
    Ok(p.sigma2 * correlation(family, q.sqrt(), p.kappa)?)
}

/// Where a variance-type quantity comes from: the mixture components, or a
/// single global value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ParamSource {
    Varying,
    Global(f64),
}

impl ParamSource {
    pub fn global(&self) -> Option<f64> {
        match self {
            ParamSource::Global(v) => Some(*v),
            ParamSource::Varying => None,
        }
    }
}

/// The nonstationary covariance: mixture components, a correlation family,
/// and the source of variance, nugget and smoothness.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NsCovariance {
    pub mc: MixtureComponentSet,
    pub family: CorrelationFamily,
    pub variance: ParamSource,
    pub nugget: ParamSource,
    /// Ignored for families without a smoothness parameter.
    pub smoothness: ParamSource,
}

/// Which quantities are taken from the mixture components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpatiallyVarying {
    pub variance: bool,
    pub nugget: bool,
    pub smoothness: bool,
}

/// Values for the quantities that are not spatially varying.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalOverrides {
    pub sigma2: Option<f64>,
    pub tau2: Option<f64>,
    pub kappa: Option<f64>,
}

/// Precomputed parameters at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointParams {
    pub location: Location,
    pub kernel: KernelMatrix,
    /// Standard deviation `σ(s)`.
    pub sd: f64,
    pub tau2: f64,
    pub kappa: f64,
    /// `|Σ(s)|^{1/4}`.
    det_qrt: f64,
}

impl PointParams {
    pub fn new(
        location: Location,
        kernel: KernelMatrix,
        sigma2: f64,
        tau2: f64,
        kappa: f64,
    ) -> Self {
        Self {
            location,
            kernel,
            sd: sigma2.max(0.0).sqrt(),
            tau2,
            kappa,
            det_qrt: kernel.det().sqrt().sqrt(),
        }
    }

    pub(crate) fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }
}

impl NsCovariance {
    /// Builds the covariance from flags plus overrides; every quantity that is
    /// not flagged as varying needs an override.
    pub fn new(
        mc: MixtureComponentSet,
        family: CorrelationFamily,
        varying: SpatiallyVarying,
        overrides: GlobalOverrides,
    ) -> Result<Self> {
        mc.validate()?;
        let pick = |flag: bool, value: Option<f64>, name: &str| -> Result<ParamSource> {
            if flag {
                Ok(ParamSource::Varying)
            } else {
                value.map(ParamSource::Global).ok_or_else(|| {
                    Error::Config(format!(
                        "{name} is not spatially varying but no global value was given"
                    ))
                })
            }
        };
        let variance = pick(varying.variance, overrides.sigma2, "variance")?;
        let nugget = pick(varying.nugget, overrides.tau2, "nugget")?;
        let smoothness = if family.has_smoothness() {
            let s = pick(varying.smoothness, overrides.kappa, "smoothness")?;
            if s == ParamSource::Varying && mc.smoothnesses.is_none() {
                return Err(Error::Config(
                    "spatially varying smoothness requires per-component values".into(),
                ));
            }
            s
        } else {
            ParamSource::Global(0.0)
        };
        Ok(Self {
            mc,
            family,
            variance,
            nugget,
            smoothness,
        })
    }

    pub fn point(&self, s: &Location) -> PointParams {
        let field = evaluate_param_field(s, &self.mc);
        let sigma2 = match self.variance {
            ParamSource::Varying => field.variance,
            ParamSource::Global(v) => v,
        };
        let tau2 = match self.nugget {
            ParamSource::Varying => field.nugget,
            ParamSource::Global(v) => v,
        };
        let kappa = match self.smoothness {
            ParamSource::Varying => field.smoothness.unwrap_or(0.0),
            ParamSource::Global(v) => v,
        };
        PointParams::new(*s, field.kernel, sigma2, tau2, kappa)
    }

    pub fn points(&self, coords: &[Location]) -> Vec<PointParams> {
        coords.iter().map(|s| self.point(s)).collect()
    }

    /// Covariance between two precomputed points, without nugget.
    #[inline]
    pub fn cov_points(&self, a: &PointParams, b: &PointParams) -> f64 {
        a.sd * b.sd * correlation_points(self.family, a, b)
    }
}

/// Nonstationary correlation (the covariance with `σ(·) = 1`).
#[inline]
pub fn correlation_points(family: CorrelationFamily, a: &PointParams, b: &PointParams) -> f64 {
    let avg = a.kernel.midpoint(&b.kernel);
    let prefactor = a.det_qrt * b.det_qrt / avg.det().sqrt();
    let q = avg.inv_quad(a.location.x - b.location.x, a.location.y - b.location.y);
    let kappa = 0.5 * (a.kappa + b.kappa);
    prefactor * correlation_unchecked(family, q.max(0.0).sqrt(), kappa)
}

/// `C^NS(s, s')` without nugget.
pub fn nonstationary_cov(s: &Location, s2: &Location, cov: &NsCovariance) -> f64 {
    cov.cov_points(&cov.point(s), &cov.point(s2))
}

/// Fills the lower triangle (and diagonal) of an `n x n` matrix.
pub(crate) fn assemble_lower(cov: &NsCovariance, points: &[PointParams]) -> Matrix {
    let n = points.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let a = &points[i];
        let row = m.row_mut(i);
        for (j, b) in points[..i].iter().enumerate() {
            row[j] = a.sd * b.sd * correlation_points(cov.family, a, b);
        }
        row[i] = a.sd * a.sd;
    }
    m
}

/// `Ω` (symmetric) and the nugget diagonal `D` as a vector.
pub fn covariance_matrix(coords: &[Location], cov: &NsCovariance) -> (Matrix, Vec<f64>) {
    let points = cov.points(coords);
    let mut omega = assemble_lower(cov, &points);
    omega.symmetrize_from_lower();
    let nugget = points.iter().map(|p| p.tau2).collect();
    (omega, nugget)
}
