//! Ground-truth kernels from log-linear and scaled inverse-logit maps of the
//! coordinates, and simulation of nonstationary Gaussian fields.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::{
    assemble_lower, CorrelationFamily, NsCovariance, ParamSource, PointParams,
};
use crate::error::{Error, Result};
use crate::geometry::{
    build_kernel_matrix, cell_centred_grid, default_lambda_w, AnisotropyParams, KernelMatrix,
    Location, MixtureComponentSet,
};
use crate::linalg::{Matrix, SpdFactor};

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let v = [self.x_min, self.x_max, self.y_min, self.y_max];
        if v.iter().any(|a| !a.is_finite())
            || !(self.x_min < self.x_max)
            || !(self.y_min < self.y_max)
        {
            return Err(Error::Config(format!(
                "domain [{}, {}] x [{}, {}] has zero area",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn lower(&self) -> Location {
        Location::new(self.x_min, self.y_min)
    }

    pub fn upper(&self) -> Location {
        Location::new(self.x_max, self.y_max)
    }

    /// `n_side x n_side` cell-centred grid of component locations.
    pub fn mc_grid(&self, n_side: usize) -> Vec<Location> {
        cell_centred_grid(self.lower(), self.upper(), n_side)
    }
}

impl Default for Domain {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 5.0,
            y_min: 0.0,
            y_max: 5.0,
        }
    }
}

/// Coefficients `(intercept, x, y)` of `ln λ1`, `ln λ2` and `logit(2η/π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelGlmCoefs {
    pub lam1: [f64; 3],
    pub lam2: [f64; 3],
    pub eta: [f64; 3],
}

impl Default for KernelGlmCoefs {
    fn default() -> Self {
        Self {
            lam1: [-1.3, 0.5, -0.6],
            lam2: [-1.4, -0.1, 0.2],
            eta: [0.0, -0.15, 0.15],
        }
    }
}

impl KernelGlmCoefs {
    pub fn validate(&self) -> Result<()> {
        if self
            .lam1
            .iter()
            .chain(&self.lam2)
            .chain(&self.eta)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("kernel coefficients must be finite".into()));
        }
        Ok(())
    }
}

fn linear(c: &[f64; 3], s: &Location) -> f64 {
    c[0] + c[1] * s.x + c[2] * s.y
}

/// Kernel at `s` from the coefficient maps.
pub fn glm_kernel_at(s: &Location, coefs: &KernelGlmCoefs) -> Result<KernelMatrix> {
    let lam1 = linear(&coefs.lam1, s).exp();
    let lam2 = linear(&coefs.lam2, s).exp();
    let eta = FRAC_PI_2 / (1.0 + (-linear(&coefs.eta, s)).exp());
    build_kernel_matrix(&AnisotropyParams::new(lam1, lam2, eta)?)
}

/// Kernels at each component location of `domain`.
pub fn glm_kernels(
    domain: &Domain,
    mc_locations: &[Location],
    coefs: &KernelGlmCoefs,
) -> Result<Vec<KernelMatrix>> {
    domain.validate()?;
    coefs.validate()?;
    mc_locations
        .iter()
        .map(|s| glm_kernel_at(s, coefs))
        .collect()
}

/// How per-location kernels are derived from the component kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum KernelMode {
    /// Mixture-weighted component kernels.
    Mixture,
    /// The coefficient maps evaluated at every location.
    Glm { coefs: KernelGlmCoefs },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub locations: Vec<Location>,
    pub mc_locations: Vec<Location>,
    pub mc_kernels: Vec<KernelMatrix>,
    pub tau2: f64,
    pub sigma2: f64,
    pub beta: Vec<f64>,
    pub kappa: Option<f64>,
    pub family: CorrelationFamily,
    /// `n x p` mean design.
    pub design: Matrix,
    pub replicates: usize,
    pub seed: u64,
    /// `None` selects `(0.5 * min component spacing)^2`.
    pub lambda_w: Option<f64>,
    pub kernel_mode: KernelMode,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOutput {
    pub sim_locations: Vec<Location>,
    pub mc_locations: Vec<Location>,
    pub mc_kernels: Vec<KernelMatrix>,
    /// Kernel at each simulated location.
    pub kernel_ellipses: Vec<KernelMatrix>,
    /// `Ω + τ² I`.
    pub cov: Matrix,
    /// `n x q`.
    pub data: Matrix,
    pub seed: u64,
    pub lambda_w: f64,
}

impl SimSpec {
    fn validate(&self) -> Result<()> {
        let n = self.locations.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no simulation locations".into()));
        }
        if self.mc_locations.len() != self.mc_kernels.len() || self.mc_locations.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} component locations and {} kernels",
                self.mc_locations.len(),
                self.mc_kernels.len()
            )));
        }
        if self.design.rows() != n || self.design.cols() != self.beta.len() {
            return Err(Error::DimensionMismatch(format!(
                "design is {}x{}, expected {n}x{}",
                self.design.rows(),
                self.design.cols(),
                self.beta.len()
            )));
        }
        if !(self.tau2 >= 0.0
            && self.sigma2 >= 0.0
            && self.tau2.is_finite()
            && self.sigma2.is_finite())
        {
            return Err(Error::InvalidParameter(
                "tau2 and sigma2 must be finite and non-negative".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "at least one replicate is required".into(),
            ));
        }
        if self.family.has_smoothness() && !self.kappa.is_some_and(|k| k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "the {} family needs a positive smoothness",
                self.family
            )));
        }
        if let Some(lw) = self.lambda_w {
            if !(lw > 0.0 && lw.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lambda_w must be positive, got {lw}"
                )));
            }
        }
        Ok(())
    }
}

/// Simulates `replicates` independent fields `Xβ + Lε`, `LLᵀ = Ω + τ² I`.
///
/// The generator is ChaCha20 seeded from `seed`; replicate `j` draws its
/// normals from stream `j`, so columns do not depend on each other or on
/// the replicate count.
pub fn simulate_field(spec: &SimSpec) -> Result<SimOutput> {
    spec.validate()?;
    let n = spec.locations.len();
    let lambda_w = spec
        .lambda_w
        .unwrap_or_else(|| default_lambda_w(&spec.mc_locations));
    let kappa = spec.kappa.unwrap_or(0.0);
    let k = spec.mc_locations.len();
    let mc = MixtureComponentSet::new(
        spec.mc_locations.clone(),
        spec.mc_kernels.clone(),
        vec![spec.sigma2; k],
        vec![spec.tau2; k],
        spec.family.has_smoothness().then(|| vec![kappa; k]),
        lambda_w,
    )?;
    let cov = NsCovariance {
        mc,
        family: spec.family,
        variance: ParamSource::Global(spec.sigma2),
        nugget: ParamSource::Global(spec.tau2),
        smoothness: ParamSource::Global(kappa),
    };
    let points: Vec<PointParams> = match spec.kernel_mode {
        KernelMode::Mixture => cov.points(&spec.locations),
        KernelMode::Glm { coefs } => {
            coefs.validate()?;
            spec.locations
                .iter()
                .map(|s| {
                    Ok(PointParams::new(
                        *s,
                        glm_kernel_at(s, &coefs)?,
                        spec.sigma2,
                        spec.tau2,
                        kappa,
                    ))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut c = assemble_lower(&cov, &points);
    for i in 0..n {
        c[(i, i)] += spec.tau2;
    }

    let mean = spec.design.mul_vec(&spec.beta);
    let mut data = Matrix::zeros(n, spec.replicates);
    if spec.sigma2 > 0.0 || spec.tau2 > 0.0 {
        let factor = SpdFactor::new(&c)?;
        let l = factor.lower();
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        let mut eps = vec![0.0; n];
        for j in 0..spec.replicates {
            rng.set_stream(j as u64);
            rng.set_word_pos(0);
            for e in eps.iter_mut() {
                *e = StandardNormal.sample(&mut rng);
            }
            for i in 0..n {
                let row = &l.row(i)[..=i];
                data[(i, j)] = mean[i] + crate::linalg::dot(row, &eps[..=i]);
            }
        }
    } else {
        for i in 0..n {
            for j in 0..spec.replicates {
                data[(i, j)] = mean[i];
            }
        }
    }
    c.symmetrize_from_lower();
    Ok(SimOutput {
        sim_locations: spec.locations.clone(),
        mc_locations: spec.mc_locations.clone(),
        mc_kernels: spec.mc_kernels.clone(),
        kernel_ellipses: points.iter().map(|p| p.kernel).collect(),
        cov: c,
        data,
        seed: spec.seed,
        lambda_w,
    })
}
