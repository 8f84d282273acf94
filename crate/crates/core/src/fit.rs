//! Model fitting: local restricted-likelihood fits of the stationary
//! anisotropic model around each mixture component, global re-estimation
//! of the variance quantities that are not spatially varying, and the GLS
//! mean coefficients.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use core::fmt;
use core::ops::Deref;

use crate::covariance::{
    assemble_lower, correlation_unchecked, CorrelationFamily, NsCovariance, ParamSource,
    PointParams, MAX_SMOOTHNESS,
};
use crate::error::{Error, Result};
use crate::geometry::{
    bounding_box, build_kernel_matrix, default_lambda_w, max_interpoint_distance, neighborhood,
    weights_for, AnisotropyParams, KernelMatrix, Location, MixtureComponentSet,
};
use crate::likelihood::{gls_beta, restricted_from, RegressionDesign, Whitened};
use crate::linalg::{Matrix, SpdFactor};
use crate::optimize::{minimize_box, OptimOptions};

/// Values for the local parameters `(λ1, λ2, τ², σ², κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalValues {
    pub lam1: f64,
    pub lam2: f64,
    pub tau2: f64,
    pub sigma2: f64,
    pub kappa: f64,
}

/// Values for the global parameters `(τ², σ², κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalValues {
    pub tau2: f64,
    pub sigma2: f64,
    pub kappa: f64,
}

/// Everything that controls a fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    pub family: CorrelationFamily,
    pub mc_locations: Vec<Location>,
    pub fit_radius: f64,
    /// `None` selects `(0.5 * min component spacing)^2`.
    pub lambda_w: Option<f64>,
    pub ns_nugget: bool,
    pub ns_variance: bool,
    pub local_lower: LocalValues,
    pub local_upper: LocalValues,
    pub local_init: LocalValues,
    /// Starting rotation angle for local fits.
    pub eta_init: f64,
    pub global_lower: GlobalValues,
    pub global_upper: GlobalValues,
    pub global_init: GlobalValues,
    pub optimizer: OptimOptions,
    pub min_neighborhood: usize,
}

impl FitConfig {
    pub fn effective_lambda_w(&self) -> f64 {
        self.lambda_w
            .unwrap_or_else(|| default_lambda_w(&self.mc_locations))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fit_radius > 0.0 && self.fit_radius.is_finite()) {
            return Err(Error::Config(format!(
                "fit radius must be positive, got {}",
                self.fit_radius
            )));
        }
        if let Some(lw) = self.lambda_w {
            if !(lw > 0.0 && lw.is_finite()) {
                return Err(Error::Config(format!(
                    "lambda_w must be positive, got {lw}"
                )));
            }
        }
        if self.mc_locations.is_empty() {
            return Err(Error::Config(
                "at least one mixture component location is required".into(),
            ));
        }
        if self
            .mc_locations
            .iter()
            .any(|l| !l.x.is_finite() || !l.y.is_finite())
        {
            return Err(Error::Config(
                "mixture component locations must be finite".into(),
            ));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.eta_init) {
            return Err(Error::Config("eta_init must lie in [0, pi/2]".into()));
        }
        let kappa = self.family.has_smoothness();
        let l = (&self.local_lower, &self.local_upper, &self.local_init);
        check_param("local lam1", l.0.lam1, l.1.lam1, l.2.lam1)?;
        check_param("local lam2", l.0.lam2, l.1.lam2, l.2.lam2)?;
        check_param("local tau2", l.0.tau2, l.1.tau2, l.2.tau2)?;
        check_param("local sigma2", l.0.sigma2, l.1.sigma2, l.2.sigma2)?;
        let g = (&self.global_lower, &self.global_upper, &self.global_init);
        check_param("global tau2", g.0.tau2, g.1.tau2, g.2.tau2)?;
        check_param("global sigma2", g.0.sigma2, g.1.sigma2, g.2.sigma2)?;
        if kappa {
            check_param("local kappa", l.0.kappa, l.1.kappa, l.2.kappa)?;
            check_param("global kappa", g.0.kappa, g.1.kappa, g.2.kappa)?;
        }
        if self.optimizer.max_iters == 0 {
            return Err(Error::Config(
                "optimizer max_iters must be at least 1".into(),
            ));
        }
        if self.min_neighborhood == 0 {
            return Err(Error::Config("min_neighborhood must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_param(name: &str, lo: f64, hi: f64, init: f64) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Config(format!(
            "{name}: bounds must satisfy 0 < lower < upper, got [{lo}, {hi}]"
        )));
    }
    if !(lo <= init && init <= hi) {
        return Err(Error::Config(format!(
            "{name}: initial value {init} outside [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Residual variance of an ordinary least squares fit, pooled over
/// replicate columns.
fn ols_variance(design: &RegressionDesign, data: &Matrix) -> Result<f64> {
    let n = design.n();
    let ident = SpdFactor::new(&Matrix::identity(n))?;
    let p = design.p();
    if n <= p {
        return Err(Error::InvalidArgument(format!(
            "need more than {p} observations"
        )));
    }
    let mut rss = 0.0;
    for j in 0..data.cols() {
        let col = Matrix::column_vector(&data.column(j));
        let (beta, _) = gls_beta(&ident, design, &col)?;
        let mean = design.mean(&beta);
        rss += col
            .as_slice()
            .iter()
            .zip(&mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(rss / ((n - p) * data.cols()) as f64)
}

/// Default configuration: exponential family, constant variance and
/// nugget, bounds and starting values scaled to the data.
pub fn default_config(
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    mc_locations: &[Location],
    fit_radius: f64,
) -> Result<FitConfig> {
    let n = coords.len();
    let p = design.p();
    if n < p + 2 {
        return Err(Error::InvalidArgument(format!(
            "{n} observations are too few for {p} mean coefficients"
        )));
    }
    check_inputs(coords, design, data)?;
    let s2 = ols_variance(design, data)?;
    let maxd = max_interpoint_distance(coords);
    let lower = 1e-5;
    let local_lower = LocalValues {
        lam1: lower,
        lam2: lower,
        tau2: lower,
        sigma2: lower,
        kappa: lower,
    };
    let local_upper = LocalValues {
        lam1: maxd / 4.0,
        lam2: maxd / 4.0,
        tau2: 4.0 * s2,
        sigma2: 4.0 * s2,
        kappa: MAX_SMOOTHNESS,
    };
    let local_init = LocalValues {
        lam1: maxd / 10.0,
        lam2: maxd / 10.0,
        tau2: 0.1 * s2,
        sigma2: 0.9 * s2,
        kappa: 1.0,
    };
    Ok(FitConfig {
        family: CorrelationFamily::Exponential,
        mc_locations: mc_locations.to_vec(),
        fit_radius,
        lambda_w: None,
        ns_nugget: false,
        ns_variance: false,
        local_lower,
        local_upper,
        local_init,
        eta_init: FRAC_PI_4,
        global_lower: GlobalValues {
            tau2: lower,
            sigma2: lower,
            kappa: lower,
        },
        global_upper: GlobalValues {
            tau2: 4.0 * s2,
            sigma2: 4.0 * s2,
            kappa: MAX_SMOOTHNESS,
        },
        global_init: GlobalValues {
            tau2: 0.1 * s2,
            sigma2: 0.9 * s2,
            kappa: 1.0,
        },
        optimizer: OptimOptions::default(),
        min_neighborhood: 10.max(p + 2),
    })
}

fn check_inputs(coords: &[Location], design: &RegressionDesign, data: &Matrix) -> Result<()> {
    let n = coords.len();
    if design.n() != n || data.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} locations, {} design rows, {} data rows",
            design.n(),
            data.rows()
        )));
    }
    if data.cols() == 0 {
        return Err(Error::DimensionMismatch(
            "data has no replicate columns".into(),
        ));
    }
    if coords.iter().any(|s| !s.x.is_finite() || !s.y.is_finite())
        || data.as_slice().iter().any(|v| !v.is_finite())
        || design.matrix().as_slice().iter().any(|v| !v.is_finite())
    {
        return Err(Error::InvalidArgument(
            "inputs contain non-finite values".into(),
        ));
    }
    Ok(())
}

/// Stationary anisotropic parameter values on the natural scale.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StationaryValues {
    aniso: AnisotropyParams,
    tau2: f64,
    sigma2: f64,
    kappa: Option<f64>,
}

/// Restricted likelihood of the stationary anisotropic model on a fixed
/// set of locations. Pairwise separations are cached once.
struct StationaryReml<'a> {
    n: usize,
    /// Separations `s_i - s_j` for `j < i`, in row-major lower order.
    diffs: Vec<(f64, f64)>,
    design: &'a RegressionDesign,
    data: &'a Matrix,
    family: CorrelationFamily,
}

impl<'a> StationaryReml<'a> {
    fn new(
        coords: &[Location],
        design: &'a RegressionDesign,
        data: &'a Matrix,
        family: CorrelationFamily,
    ) -> Self {
        let n = coords.len();
        let mut diffs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in 0..i {
                diffs.push((coords[i].x - coords[j].x, coords[i].y - coords[j].y));
            }
        }
        Self {
            n,
            diffs,
            design,
            data,
            family,
        }
    }

    fn covariance(&self, v: &StationaryValues) -> Option<Matrix> {
        let kernel = build_kernel_matrix(&v.aniso).ok()?;
        let kappa = v.kappa.unwrap_or(0.0);
        let mut c = Matrix::zeros(self.n, self.n);
        let mut k = 0;
        for i in 0..self.n {
            let row = c.row_mut(i);
            for r in row[..i].iter_mut() {
                let (dx, dy) = self.diffs[k];
                k += 1;
                let h = kernel.inv_quad(dx, dy).max(0.0).sqrt();
                *r = v.sigma2 * correlation_unchecked(self.family, h, kappa);
            }
            row[i] = v.sigma2 + v.tau2;
        }
        Some(c)
    }

    fn loglik(&self, v: &StationaryValues) -> f64 {
        let Some(c) = self.covariance(v) else {
            return f64::NEG_INFINITY;
        };
        let Ok(factor) = SpdFactor::new(&c) else {
            return f64::NEG_INFINITY;
        };
        match Whitened::new(&factor, self.design, self.data) {
            Ok(w) => restricted_from(&factor, &w),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Optimizer coordinates: `(ln λ1, ln λ2, η, ln τ², ln σ² [, ln κ])`.
struct StationaryLayout {
    has_kappa: bool,
    lower: LocalValues,
    upper: LocalValues,
}

impl StationaryLayout {
    /// Natural-scale values, clamped to the bounds (`exp(ln b)` can land a
    /// rounding error outside them).
    fn decode(&self, t: &[f64]) -> StationaryValues {
        let (lo, hi) = (&self.lower, &self.upper);
        StationaryValues {
            aniso: AnisotropyParams {
                lam1: t[0].exp().clamp(lo.lam1, hi.lam1),
                lam2: t[1].exp().clamp(lo.lam2, hi.lam2),
                eta: t[2].clamp(0.0, FRAC_PI_2),
            },
            tau2: t[3].exp().clamp(lo.tau2, hi.tau2),
            sigma2: t[4].exp().clamp(lo.sigma2, hi.sigma2),
            kappa: self.has_kappa.then(|| t[5].exp().clamp(lo.kappa, hi.kappa)),
        }
    }

    fn encode(&self, v: &LocalValues, eta: f64) -> Vec<f64> {
        let mut t = vec![v.lam1.ln(), v.lam2.ln(), eta, v.tau2.ln(), v.sigma2.ln()];
        if self.has_kappa {
            t.push(v.kappa.ln());
        }
        t
    }
}

struct StationaryFit {
    values: StationaryValues,
    loglik: f64,
    converged: bool,
    iterations: usize,
}

fn fit_stationary(problem: &StationaryReml<'_>, config: &FitConfig) -> Result<StationaryFit> {
    let layout = StationaryLayout {
        has_kappa: config.family.has_smoothness(),
        lower: config.local_lower,
        upper: config.local_upper,
    };
    let lower = layout.encode(&config.local_lower, 0.0);
    let upper = layout.encode(&config.local_upper, FRAC_PI_2);
    let x0 = layout.encode(&config.local_init, config.eta_init);
    let res = minimize_box(
        |t| -problem.loglik(&layout.decode(t)),
        &x0,
        &lower,
        &upper,
        &config.optimizer,
    )?;
    let values = layout.decode(&res.x);
    Ok(StationaryFit {
        values,
        loglik: -res.value,
        converged: res.converged,
        iterations: res.iterations,
    })
}

/// Outcome of the local fit for one mixture component.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalFitRecord {
    pub component: usize,
    pub location: Location,
    pub lam1: f64,
    pub lam2: f64,
    pub eta: f64,
    pub tau2: f64,
    pub sigma2: f64,
    pub kappa: Option<f64>,
    pub neighborhood: usize,
    pub converged: bool,
    /// Set when the component was not fitted and inherited its parameters
    /// from fitted neighbors.
    pub skipped: bool,
    /// Maximized local restricted log-likelihood.
    pub loglik: Option<f64>,
    pub iterations: usize,
    /// Design columns dropped because they are collinear inside the
    /// neighborhood.
    pub dropped_columns: Vec<usize>,
}

impl LocalFitRecord {
    pub fn kernel(&self) -> Result<KernelMatrix> {
        build_kernel_matrix(&AnisotropyParams::new(self.lam1, self.lam2, self.eta)?)
    }
}

/// Restricted-likelihood fit of the stationary model to the observations
/// within `fit_radius` of mixture component `component`.
pub fn local_fit(
    component: usize,
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    config: &FitConfig,
) -> Result<LocalFitRecord> {
    let center = *config.mc_locations.get(component).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "component {component} out of range (K = {})",
            config.mc_locations.len()
        ))
    })?;
    let idx = neighborhood(coords, &center, config.fit_radius);
    let required = config.min_neighborhood.max(design.p() + 2);
    if idx.len() < required {
        return Err(Error::NeighborhoodTooSmall {
            component,
            count: idx.len(),
            required,
        });
    }
    let (local_design, dropped) = design.subset(&idx);
    let local_data = data.select_rows(&idx);
    let local_coords: Vec<Location> = idx.iter().map(|&i| coords[i]).collect();
    let problem = StationaryReml::new(&local_coords, &local_design, &local_data, config.family);
    let fit = fit_stationary(&problem, config)?;
    let v = fit.values;
    Ok(LocalFitRecord {
        component,
        location: center,
        lam1: v.aniso.lam1,
        lam2: v.aniso.lam2,
        eta: v.aniso.eta,
        tau2: v.tau2,
        sigma2: v.sigma2,
        kappa: v.kappa,
        neighborhood: idx.len(),
        converged: fit.converged,
        skipped: false,
        loglik: fit.loglik.is_finite().then_some(fit.loglik),
        iterations: fit.iterations,
        dropped_columns: dropped,
    })
}

/// Progress notifications emitted while fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitEvent {
    LocalStart {
        component: usize,
        total: usize,
        neighborhood: usize,
    },
    GlobalStart,
}

/// Runs the independent per-component jobs of a fit. Implementations may
/// run them concurrently but must return results in component order.
pub trait ComponentRunner: Sync {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;

    fn progress(&self, _event: FitEvent) {}
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ComponentRunner for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Conditions worth reporting that did not stop the fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum FitWarning {
    ComponentSkipped {
        component: usize,
        count: usize,
        required: usize,
    },
    LocalLikelihoodFailed {
        component: usize,
    },
    ColumnsDropped {
        component: usize,
        columns: Vec<usize>,
    },
    NotConverged {
        stage: String,
    },
    Jitter {
        amount: f64,
    },
}

impl fmt::Display for FitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitWarning::ComponentSkipped {
                component,
                count,
                required,
            } => write!(
                f,
                "component {component}: {count} observations in the neighborhood (need {required}); \
                 parameters inherited from fitted neighbors"
            ),
            FitWarning::LocalLikelihoodFailed { component } => write!(
                f,
                "component {component}: local likelihood could not be evaluated; \
                 parameters inherited from fitted neighbors"
            ),
            FitWarning::ColumnsDropped { component, columns } => write!(
                f,
                "component {component}: design columns {columns:?} are collinear in the neighborhood and were dropped"
            ),
            FitWarning::NotConverged { stage } => {
                write!(f, "{stage}: optimizer stopped before convergence")
            }
            FitWarning::Jitter { amount } => write!(
                f,
                "covariance matrix needed {amount:e} added to its diagonal to factorize"
            ),
        }
    }
}

/// Results of the global re-estimation step; `None` for quantities that
/// are spatially varying or absent from the family.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalEstimates {
    pub tau2: Option<f64>,
    pub sigma2: Option<f64>,
    pub kappa: Option<f64>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Nonstationary,
    Anisotropic,
}

/// The estimated quantities of a fitted model, without the covariance
/// factorization (which is rebuilt deterministically from them).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelState {
    pub kind: ModelKind,
    pub covariance: NsCovariance,
    pub local_fits: Vec<LocalFitRecord>,
    pub global: GlobalEstimates,
    pub beta: Vec<f64>,
    pub beta_cov: Matrix,
    pub coords: Vec<Location>,
    pub design: RegressionDesign,
    pub data: Matrix,
    pub config: FitConfig,
    pub warnings: Vec<FitWarning>,
}

/// A fitted model ready for prediction.
#[derive(Debug, Clone)]
pub struct FittedModel {
    state: ModelState,
    points: Vec<PointParams>,
    factor: SpdFactor,
    /// `L^{-1}(z_j - X β)` per replicate.
    residuals: Vec<Vec<f64>>,
}

impl Deref for FittedModel {
    type Target = ModelState;
    fn deref(&self) -> &ModelState {
        &self.state
    }
}

impl PartialEq for FittedModel {
    fn eq(&self, other: &Self) -> bool {
        self.state == other.state
    }
}

/// `Ω + D` over the model's training locations.
fn model_factor(cov: &NsCovariance, points: &[PointParams]) -> Result<SpdFactor> {
    let mut c = assemble_lower(cov, points);
    for (i, p) in points.iter().enumerate() {
        c[(i, i)] += p.tau2;
    }
    SpdFactor::new(&c)
}

impl FittedModel {
    /// Rebuilds the covariance factorization for a stored model state.
    pub fn from_state(state: ModelState) -> Result<Self> {
        check_inputs(&state.coords, &state.design, &state.data)?;
        if state.beta.len() != state.design.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a design with {} columns",
                state.beta.len(),
                state.design.p()
            )));
        }
        state.covariance.mc.validate()?;
        let points = state.covariance.points(&state.coords);
        let factor = model_factor(&state.covariance, &points)?;
        Ok(Self::assemble(state, points, factor))
    }

    fn assemble(state: ModelState, points: Vec<PointParams>, factor: SpdFactor) -> Self {
        let mean = state.design.mean(&state.beta);
        let residuals = (0..state.data.cols())
            .map(|j| {
                let r: Vec<f64> = state
                    .data
                    .column(j)
                    .iter()
                    .zip(&mean)
                    .map(|(z, m)| z - m)
                    .collect();
                factor.forward(&r)
            })
            .collect();
        Self {
            state,
            points,
            factor,
            residuals,
        }
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub(crate) fn training_points(&self) -> &[PointParams] {
        &self.points
    }

    pub(crate) fn whitened_residuals(&self) -> &[Vec<f64>] {
        &self.residuals
    }

    /// Kernel matrix, process variance and nugget at an arbitrary location.
    pub fn params_at(&self, s: &Location) -> PointParams {
        self.state.covariance.point(s)
    }

    /// Anisotropy of the stationary fit; `None` for nonstationary models.
    pub fn aniso_params(&self) -> Option<AnisotropyParams> {
        match self.state.kind {
            ModelKind::Anisotropic => self.state.local_fits.first().map(|r| AnisotropyParams {
                lam1: r.lam1,
                lam2: r.lam2,
                eta: r.eta,
            }),
            ModelKind::Nonstationary => None,
        }
    }
}

/// Finishes a fit: GLS coefficients and the stored factorization.
#[allow(clippy::too_many_arguments)]
fn finish(
    kind: ModelKind,
    covariance: NsCovariance,
    local_fits: Vec<LocalFitRecord>,
    global: GlobalEstimates,
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    config: &FitConfig,
    mut warnings: Vec<FitWarning>,
) -> Result<FittedModel> {
    let points = covariance.points(coords);
    let factor = model_factor(&covariance, &points)?;
    if factor.jitter() > 0.0 {
        warnings.push(FitWarning::Jitter {
            amount: factor.jitter(),
        });
    }
    let (beta, beta_cov) = gls_beta(&factor, design, data)?;
    let state = ModelState {
        kind,
        covariance,
        local_fits,
        global,
        beta,
        beta_cov,
        coords: coords.to_vec(),
        design: design.clone(),
        data: data.clone(),
        config: config.clone(),
        warnings,
    };
    Ok(FittedModel::assemble(state, points, factor))
}

/// Stationary anisotropic fit on all data.
pub fn fit_anisotropic(
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    config: &FitConfig,
) -> Result<FittedModel> {
    config.validate()?;
    check_inputs(coords, design, data)?;
    if coords.len() < design.p() + 2 {
        return Err(Error::InvalidArgument(format!(
            "{} observations are too few for {} mean coefficients",
            coords.len(),
            design.p()
        )));
    }
    let problem = StationaryReml::new(coords, design, data, config.family);
    let fit = fit_stationary(&problem, config)?;
    if !fit.loglik.is_finite() {
        return Err(Error::NotPositiveDefinite { dim: coords.len() });
    }
    let v = fit.values;
    let mut warnings = Vec::new();
    if !fit.converged {
        warnings.push(FitWarning::NotConverged {
            stage: "anisotropic fit".into(),
        });
    }
    let kernel = build_kernel_matrix(&v.aniso)?;
    let center = bounding_box(coords)
        .map(|(lo, hi)| Location::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)))
        .unwrap_or(Location::new(0.0, 0.0));
    let mc = MixtureComponentSet::new(
        vec![center],
        vec![kernel],
        vec![v.sigma2],
        vec![v.tau2],
        v.kappa.map(|k| vec![k]),
        1.0,
    )?;
    let covariance = NsCovariance {
        mc,
        family: config.family,
        variance: ParamSource::Global(v.sigma2),
        nugget: ParamSource::Global(v.tau2),
        smoothness: ParamSource::Global(v.kappa.unwrap_or(0.0)),
    };
    let record = LocalFitRecord {
        component: 0,
        location: center,
        lam1: v.aniso.lam1,
        lam2: v.aniso.lam2,
        eta: v.aniso.eta,
        tau2: v.tau2,
        sigma2: v.sigma2,
        kappa: v.kappa,
        neighborhood: coords.len(),
        converged: fit.converged,
        skipped: false,
        loglik: Some(fit.loglik),
        iterations: fit.iterations,
        dropped_columns: Vec::new(),
    };
    let global = GlobalEstimates {
        tau2: Some(v.tau2),
        sigma2: Some(v.sigma2),
        kappa: v.kappa,
        loglik: Some(fit.loglik),
        converged: fit.converged,
        iterations: fit.iterations,
    };
    finish(
        ModelKind::Anisotropic,
        covariance,
        vec![record],
        global,
        coords,
        design,
        data,
        config,
        warnings,
    )
}

/// Nonstationary fit with local fits run sequentially.
pub fn fit_nonstationary(
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    config: &FitConfig,
) -> Result<FittedModel> {
    fit_nonstationary_with(&Sequential, coords, design, data, config)
}

/// Nonstationary fit with the per-component local fits dispatched through
/// `runner`.
pub fn fit_nonstationary_with<R: ComponentRunner>(
    runner: &R,
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    config: &FitConfig,
) -> Result<FittedModel> {
    config.validate()?;
    check_inputs(coords, design, data)?;
    let k_total = config.mc_locations.len();
    let lambda_w = config.effective_lambda_w();
    let has_kappa = config.family.has_smoothness();

    let outcomes = runner.map(k_total, |k| {
        runner.progress(FitEvent::LocalStart {
            component: k,
            total: k_total,
            neighborhood: neighborhood(coords, &config.mc_locations[k], config.fit_radius).len(),
        });
        local_fit(k, coords, design, data, config)
    });

    let mut warnings = Vec::new();
    let mut records: Vec<Option<LocalFitRecord>> = Vec::with_capacity(k_total);
    let mut skipped_counts = vec![0usize; k_total];
    for (k, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rec) if rec.loglik.is_some() => {
                if !rec.dropped_columns.is_empty() {
                    warnings.push(FitWarning::ColumnsDropped {
                        component: k,
                        columns: rec.dropped_columns.clone(),
                    });
                }
                if !rec.converged {
                    warnings.push(FitWarning::NotConverged {
                        stage: format!("local fit {k}"),
                    });
                }
                records.push(Some(rec));
            }
            Ok(rec) => {
                warnings.push(FitWarning::LocalLikelihoodFailed { component: k });
                skipped_counts[k] = rec.neighborhood;
                records.push(None);
            }
            Err(Error::NeighborhoodTooSmall {
                component,
                count,
                required,
            }) => {
                warnings.push(FitWarning::ComponentSkipped {
                    component,
                    count,
                    required,
                });
                skipped_counts[k] = count;
                records.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let fitted: Vec<&LocalFitRecord> = records.iter().flatten().collect();
    if fitted.is_empty() {
        return Err(Error::Unfittable);
    }

    // skipped components inherit a weighted average of the fitted ones
    let anchors: Vec<Location> = fitted.iter().map(|r| r.location).collect();
    let fitted_kernels: Vec<KernelMatrix> =
        fitted.iter().map(|r| r.kernel()).collect::<Result<_>>()?;
    let mut local_fits = Vec::with_capacity(k_total);
    for (k, rec) in records.iter().enumerate() {
        if let Some(r) = rec {
            local_fits.push(r.clone());
            continue;
        }
        let b = config.mc_locations[k];
        let w = weights_for(&b, &anchors, lambda_w);
        let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
        let (mut tau2, mut sigma2, mut kappa) = (0.0, 0.0, 0.0);
        for ((wj, r), kern) in w.iter().zip(&fitted).zip(&fitted_kernels) {
            s11 += wj * kern.s11();
            s12 += wj * kern.s12();
            s22 += wj * kern.s22();
            tau2 += wj * r.tau2;
            sigma2 += wj * r.sigma2;
            kappa += wj * r.kappa.unwrap_or(0.0);
        }
        let aniso = KernelMatrix::new(s11, s12, s22)?.to_anisotropy();
        local_fits.push(LocalFitRecord {
            component: k,
            location: b,
            lam1: aniso.lam1,
            lam2: aniso.lam2,
            eta: aniso.eta,
            tau2,
            sigma2,
            kappa: has_kappa.then_some(kappa),
            neighborhood: skipped_counts[k],
            converged: false,
            skipped: true,
            loglik: None,
            iterations: 0,
            dropped_columns: Vec::new(),
        });
    }

    let mc = MixtureComponentSet::new(
        local_fits.iter().map(|r| r.location).collect(),
        local_fits
            .iter()
            .map(|r| r.kernel())
            .collect::<Result<_>>()?,
        local_fits.iter().map(|r| r.sigma2).collect(),
        local_fits.iter().map(|r| r.tau2).collect(),
        has_kappa.then(|| local_fits.iter().map(|r| r.kappa.unwrap_or(1.0)).collect()),
        lambda_w,
    )?;

    runner.progress(FitEvent::GlobalStart);
    let (covariance, global) = global_step(mc, coords, design, data, config)?;
    if !global.converged && global.iterations > 0 {
        warnings.push(FitWarning::NotConverged {
            stage: "global variance estimation".into(),
        });
    }
    finish(
        ModelKind::Nonstationary,
        covariance,
        local_fits,
        global,
        coords,
        design,
        data,
        config,
        warnings,
    )
}

/// Restricted-likelihood re-estimation of the quantities that are not
/// spatially varying, holding the mixture-component fields fixed.
fn global_step(
    mc: MixtureComponentSet,
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    config: &FitConfig,
) -> Result<(NsCovariance, GlobalEstimates)> {
    let free_tau2 = !config.ns_nugget;
    let free_sigma2 = !config.ns_variance;
    let free_kappa = config.family.has_smoothness();

    let build = |tau2: f64, sigma2: f64, kappa: f64| NsCovariance {
        mc: mc.clone(),
        family: config.family,
        variance: if free_sigma2 {
            ParamSource::Global(sigma2)
        } else {
            ParamSource::Varying
        },
        nugget: if free_tau2 {
            ParamSource::Global(tau2)
        } else {
            ParamSource::Varying
        },
        smoothness: ParamSource::Global(if free_kappa { kappa } else { 0.0 }),
    };

    let init = config.global_init;
    if !(free_tau2 || free_sigma2 || free_kappa) {
        return Ok((
            build(init.tau2, init.sigma2, init.kappa),
            GlobalEstimates::default(),
        ));
    }

    // With σ free the base matrix is the correlation R scaled by σ²; with σ
    // varying it is Ω itself. It only depends on κ.
    let unit = build(init.tau2, 1.0, init.kappa);
    let points = unit.points(coords);
    let nugget_field: Vec<f64> = points.iter().map(|p| p.tau2).collect();
    let base_for = |kappa: f64| -> Matrix {
        let mut cov = unit.clone();
        cov.smoothness = ParamSource::Global(kappa);
        let pts: Vec<PointParams> = points
            .iter()
            .map(|p| if free_kappa { p.with_kappa(kappa) } else { *p })
            .collect();
        assemble_lower(&cov, &pts)
    };
    let fixed_base = (!free_kappa).then(|| base_for(0.0));

    let mut names = Vec::new();
    let (mut lower, mut upper, mut x0) = (Vec::new(), Vec::new(), Vec::new());
    let gl = (&config.global_lower, &config.global_upper);
    if free_tau2 {
        names.push(0);
        lower.push(gl.0.tau2.ln());
        upper.push(gl.1.tau2.ln());
        x0.push(init.tau2.ln());
    }
    if free_sigma2 {
        names.push(1);
        lower.push(gl.0.sigma2.ln());
        upper.push(gl.1.sigma2.ln());
        x0.push(init.sigma2.ln());
    }
    if free_kappa {
        names.push(2);
        lower.push(gl.0.kappa.ln());
        upper.push(gl.1.kappa.ln());
        x0.push(init.kappa.ln());
    }
    let decode = |t: &[f64]| -> (f64, f64, f64) {
        let (mut tau2, mut sigma2, mut kappa) = (init.tau2, 1.0, init.kappa);
        for (&name, v) in names.iter().zip(t) {
            match name {
                0 => tau2 = v.exp().clamp(gl.0.tau2, gl.1.tau2),
                1 => sigma2 = v.exp().clamp(gl.0.sigma2, gl.1.sigma2),
                _ => kappa = v.exp().clamp(gl.0.kappa, gl.1.kappa),
            }
        }
        (tau2, sigma2, kappa)
    };
    let loglik = |t: &[f64]| -> f64 {
        let (tau2, sigma2, kappa) = decode(t);
        let owned;
        let base = match &fixed_base {
            Some(b) => b,
            None => {
                owned = base_for(kappa);
                &owned
            }
        };
        let n = base.rows();
        let mut c = Matrix::zeros(n, n);
        for i in 0..n {
            let (src, dst) = (base.row(i), c.row_mut(i));
            for j in 0..=i {
                dst[j] = sigma2 * src[j];
            }
            dst[i] += if free_tau2 { tau2 } else { nugget_field[i] };
        }
        let Ok(factor) = SpdFactor::new(&c) else {
            return f64::NEG_INFINITY;
        };
        match Whitened::new(&factor, design, data) {
            Ok(w) => restricted_from(&factor, &w),
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let res = minimize_box(|t| -loglik(t), &x0, &lower, &upper, &config.optimizer)?;
    if !res.value.is_finite() {
        return Err(Error::NotPositiveDefinite { dim: coords.len() });
    }
    let (tau2, sigma2, kappa) = decode(&res.x);
    let global = GlobalEstimates {
        tau2: free_tau2.then_some(tau2),
        sigma2: free_sigma2.then_some(sigma2),
        kappa: free_kappa.then_some(kappa),
        loglik: Some(-res.value),
        converged: res.converged,
        iterations: res.iterations,
    };
    Ok((build(tau2, sigma2, kappa), global))
}
