//! The JSON configuration file. Both sections are optional and every field
//! has a default except the fit radius.

use std::path::Path;

use nsgp_core::fit::{GlobalValues, LocalValues};
use nsgp_core::simulate::{Domain, KernelGlmCoefs};
use nsgp_core::{
    default_config, CorrelationFamily, FitConfig, Location, Matrix, OptimOptions, RegressionDesign,
};
use serde::{Deserialize, Serialize};

use crate::dataset::Columns;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub simulate: SimulateSettings,
    #[serde(default)]
    pub fit: FitSettings,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocationLayout {
    /// Regular grid including the domain edges.
    Grid { nx: usize, ny: usize },
    /// Uniformly scattered points.
    Random { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    /// Mixture-weighted component kernels.
    Mixture,
    /// Coefficient maps evaluated at every location.
    Glm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSettings {
    pub domain: Domain,
    pub locations: LocationLayout,
    /// Components on an `n x n` cell-centred grid over the domain.
    pub mc_grid_side: usize,
    pub kernel_coefs: KernelGlmCoefs,
    pub location_kernels: KernelSource,
    pub family: CorrelationFamily,
    pub tau2: f64,
    pub sigma2: f64,
    pub kappa: Option<f64>,
    /// Either one coefficient (intercept) or three (intercept, x, y).
    pub beta: Vec<f64>,
    pub replicates: usize,
    pub holdouts: usize,
    pub lambda_w: Option<f64>,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            domain: Domain::default(),
            locations: LocationLayout::Grid { nx: 25, ny: 25 },
            mc_grid_side: 3,
            kernel_coefs: KernelGlmCoefs::default(),
            location_kernels: KernelSource::Mixture,
            family: CorrelationFamily::Exponential,
            tau2: 0.1,
            sigma2: 1.0,
            kappa: None,
            beta: vec![4.0, -0.5, 0.5],
            replicates: 1,
            holdouts: 60,
            lambda_w: None,
        }
    }
}

impl SimulateSettings {
    pub fn validate(&self) -> CliResult<()> {
        self.domain.validate()?;
        self.kernel_coefs.validate()?;
        let n = match self.locations {
            LocationLayout::Grid { nx, ny } => nx * ny,
            LocationLayout::Random { n } => n,
        };
        if n == 0 {
            return Err(CliError::Config("no simulation locations".into()));
        }
        if self.mc_grid_side == 0 {
            return Err(CliError::Config("mc_grid_side must be at least 1".into()));
        }
        if self.beta.len() != 1 && self.beta.len() != 3 {
            return Err(CliError::Config(format!(
                "beta must have 1 or 3 entries, got {}",
                self.beta.len()
            )));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        if self.holdouts >= n {
            return Err(CliError::Config(format!(
                "{} holdouts leave no training locations out of {n}",
                self.holdouts
            )));
        }
        Ok(())
    }

    /// Mean design: intercept, or intercept and both coordinates.
    pub fn design(&self, locations: &[Location]) -> CliResult<Matrix> {
        let p = self.beta.len();
        let values = locations
            .iter()
            .flat_map(|s| [1.0, s.x, s.y].into_iter().take(p))
            .collect();
        Ok(Matrix::from_vec(locations.len(), p, values)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    pub columns: Columns,
    pub family: CorrelationFamily,
    pub fit_radius: Option<f64>,
    pub lambda_w: Option<f64>,
    /// Explicit component locations; otherwise a cell-centred grid of
    /// `mc_grid_side^2` points over the data's bounding box.
    pub mc_locations: Option<Vec<[f64; 2]>>,
    pub mc_grid_side: usize,
    pub ns_nugget: bool,
    pub ns_variance: bool,
    pub local_lower: Option<LocalValues>,
    pub local_upper: Option<LocalValues>,
    pub local_init: Option<LocalValues>,
    pub eta_init: Option<f64>,
    pub global_lower: Option<GlobalValues>,
    pub global_upper: Option<GlobalValues>,
    pub global_init: Option<GlobalValues>,
    pub optimizer: Option<OptimOptions>,
    pub min_neighborhood: Option<usize>,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            columns: Columns::default(),
            family: CorrelationFamily::Exponential,
            fit_radius: None,
            lambda_w: None,
            mc_locations: None,
            mc_grid_side: 3,
            ns_nugget: false,
            ns_variance: false,
            local_lower: None,
            local_upper: None,
            local_init: None,
            eta_init: None,
            global_lower: None,
            global_upper: None,
            global_init: None,
            optimizer: None,
            min_neighborhood: None,
        }
    }
}

/// Component locations and whether they came from the default grid.
pub fn mc_locations(
    settings: &FitSettings,
    coords: &[Location],
) -> CliResult<(Vec<Location>, bool)> {
    if let Some(locs) = &settings.mc_locations {
        if locs.is_empty() {
            return Err(CliError::Config("mc_locations is empty".into()));
        }
        return Ok((
            locs.iter().map(|p| Location::new(p[0], p[1])).collect(),
            false,
        ));
    }
    if settings.mc_grid_side == 0 {
        return Err(CliError::Config("mc_grid_side must be at least 1".into()));
    }
    let (lo, hi) = nsgp_core::geometry::bounding_box(coords)
        .ok_or_else(|| CliError::Data("no observation locations".into()))?;
    Ok((
        nsgp_core::geometry::cell_centred_grid(lo, hi, settings.mc_grid_side),
        true,
    ))
}

/// Data-scaled defaults with the settings' overrides applied.
pub fn build_fit_config(
    settings: &FitSettings,
    coords: &[Location],
    design: &RegressionDesign,
    data: &Matrix,
    mc: &[Location],
) -> CliResult<FitConfig> {
    let radius = settings.fit_radius.ok_or_else(|| {
        CliError::Config("a fit radius is required (fit.fit_radius or --fit-radius)".into())
    })?;
    let mut cfg = default_config(coords, design, data, mc, radius)?;
    cfg.family = settings.family;
    cfg.lambda_w = settings.lambda_w;
    cfg.ns_nugget = settings.ns_nugget;
    cfg.ns_variance = settings.ns_variance;
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = settings.$field {
                cfg.$field = v;
            }
        )*};
    }
    apply!(
        local_lower,
        local_upper,
        local_init,
        eta_init,
        global_lower,
        global_upper,
        global_init,
        optimizer,
        min_neighborhood
    );
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ConfigFile>(r#"{"fit": {"fit_radus": 2.0}}"#).unwrap_err();
        assert!(err.to_string().contains("fit_radus"));
    }

    #[test]
    fn partial_sections_take_defaults() {
        let cfg: ConfigFile = serde_json::from_str(r#"{"simulate": {"replicates": 2}}"#).unwrap();
        assert_eq!(cfg.simulate.replicates, 2);
        assert_eq!(
            cfg.simulate.locations,
            LocationLayout::Grid { nx: 25, ny: 25 }
        );
        assert_eq!(cfg.fit, FitSettings::default());
    }

    #[test]
    fn zero_area_domain_is_a_config_error() {
        let mut s = SimulateSettings::default();
        s.domain.y_max = s.domain.y_min;
        assert!(matches!(s.validate(), Err(CliError::Config(_))));
    }
}
