//! Ground-truth sidecar written next to a simulated capture.

use std::path::Path;

use ndarray::{Array1, Array2};
use phasecal::model::{OffsetRealization, OffsetSpec, UeLocation};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSidecar {
    pub ue_x: f64,
    pub ue_y: f64,
    pub seed: u64,
    pub freq_mean: f64,
    pub freq_std: f64,
    pub spatial_half_width: f64,
    pub phi_a: Vec<f64>,
    /// One row per antenna.
    pub phi_f: Vec<Vec<f64>>,
}

impl TruthSidecar {
    pub fn new(ue: &UeLocation, spec: &OffsetSpec, offsets: &OffsetRealization) -> Self {
        TruthSidecar {
            ue_x: ue.x,
            ue_y: ue.y,
            seed: spec.seed,
            freq_mean: spec.freq_mean,
            freq_std: spec.freq_std,
            spatial_half_width: spec.spatial_half_width,
            phi_a: offsets.phi_a.to_vec(),
            phi_f: offsets.phi_f.outer_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn ue(&self) -> Result<UeLocation> {
        Ok(UeLocation::new(self.ue_x, self.ue_y)?)
    }

    pub fn offsets(&self) -> Result<OffsetRealization> {
        let n = self.phi_f.len();
        let k = self.phi_f.first().map_or(0, Vec::len);
        if self.phi_a.len() != n || self.phi_f.iter().any(|r| r.len() != k) {
            return Err(CliError::Data("truth offset tables have inconsistent shapes".into()));
        }
        Ok(OffsetRealization {
            phi_f: Array2::from_shape_vec((n, k), self.phi_f.concat()).expect("shape checked"),
            phi_a: Array1::from(self.phi_a.clone()),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sidecar serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Data(format!(
                "ground truth {} is required for calibration: {e}",
                path.display()
            ))
        })?;
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}
