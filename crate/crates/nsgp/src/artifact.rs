//! Saved models.

use std::path::Path;

use nsgp_core::fit::ModelState;
use nsgp_core::FittedModel;
use serde::{Deserialize, Serialize};

use crate::config::FitSettings;
use crate::dataset::Columns;
use crate::error::{CliError, CliResult};
use crate::output::{to_json, write_atomic};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDigest {
    /// File name without directories.
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub tool_version: String,
    pub created_unix: u64,
    pub inputs: Vec<InputDigest>,
}

impl Provenance {
    pub fn new(inputs: Vec<InputDigest>) -> CliResult<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: crate::output::timestamp()?,
            inputs,
        })
    }
}

/// A fitted model with the settings and column roles used to produce it.
/// The covariance factorization is not stored; it is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub settings: FitSettings,
    pub columns: Columns,
    pub model: ModelState,
}

impl ModelArtifact {
    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        to_json(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let a: ModelArtifact = serde_json::from_slice(bytes)
            .map_err(|e| CliError::Data(format!("malformed model file: {e}")))?;
        if a.schema_version != SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "model file schema version {} is not supported (expected {SCHEMA_VERSION})",
                a.schema_version
            )));
        }
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn fitted(&self) -> CliResult<FittedModel> {
        Ok(FittedModel::from_state(self.model.clone())?)
    }
}
