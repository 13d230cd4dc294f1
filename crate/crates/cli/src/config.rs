//! Flat TOML experiment configuration with `key=value` overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use phasecal::model::{AmplitudeModel, ArrayGeometry, OffsetSpec, Snr, SystemConfig, UeLocation};
use phasecal::saf::SpatialGrid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Per-sample SNR: a number of dB or the string `"noiseless"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrSetting {
    Db(f64),
    Named(NoiselessTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiselessTag {
    Noiseless,
}

impl SnrSetting {
    pub fn to_snr(self) -> Snr {
        match self {
            SnrSetting::Db(v) => Snr::Db(v),
            SnrSetting::Named(NoiselessTag::Noiseless) => Snr::Noiseless,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeSetting {
    Unit,
    InverseDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub carrier_frequency: f64,
    pub subcarrier_spacing: f64,
    pub num_subcarriers: usize,
    pub num_antennas: usize,
    pub antenna_spacing: f64,
    pub num_symbols: usize,
    pub snr_db: SnrSetting,
    pub amplitude_model: AmplitudeSetting,

    pub ue_x: f64,
    pub ue_y: f64,

    pub freq_mean: f64,
    pub freq_std: f64,
    pub spatial_half_width: f64,
    pub seed: u64,

    /// SNR used by the bound sweeps.
    pub crlb_snr_db: f64,
    pub crlb_sigmas: Vec<f64>,
    pub crlb_antenna_counts: Vec<usize>,

    /// Offset level of the frequency and spatial SAF scenarios.
    pub saf_sigma: f64,
    pub pmsr_sigmas: Vec<f64>,
    /// Seeds `seed, seed+1, …` used per sweep point.
    pub pmsr_seed_count: usize,

    pub grid_x_min: f64,
    pub grid_x_max: f64,
    pub grid_y_min: f64,
    pub grid_y_max: f64,
    pub grid_step: f64,
    pub mainlobe_radius: f64,

    pub range_oversampling: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sys = SystemConfig::default();
        let grid = SpatialGrid::default();
        ExperimentConfig {
            carrier_frequency: sys.carrier_frequency,
            subcarrier_spacing: sys.subcarrier_spacing,
            num_subcarriers: sys.num_subcarriers,
            num_antennas: sys.num_antennas,
            antenna_spacing: sys.antenna_spacing,
            num_symbols: sys.num_symbols,
            snr_db: SnrSetting::Db(20.0),
            amplitude_model: AmplitudeSetting::Unit,
            ue_x: -2.0,
            ue_y: 1.0,
            freq_mean: 0.0,
            freq_std: PI / 4.0,
            spatial_half_width: PI,
            seed: 0,
            crlb_snr_db: 9.0,
            crlb_sigmas: (0..=16).map(|i| i as f64 * PI / 16.0).collect(),
            crlb_antenna_counts: phasecal::crlb::DEFAULT_ANTENNA_COUNTS.to_vec(),
            saf_sigma: PI / 4.0,
            pmsr_sigmas: (0..=8).map(|i| i as f64 * PI / 16.0).collect(),
            pmsr_seed_count: 20,
            grid_x_min: grid.x_min,
            grid_x_max: grid.x_max,
            grid_y_min: grid.y_min,
            grid_y_max: grid.y_max,
            grid_step: grid.step,
            mainlobe_radius: phasecal::saf::DEFAULT_MAINLOBE_RADIUS,
            range_oversampling: phasecal::calib::DEFAULT_RANGE_OVERSAMPLING,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Loads an optional TOML file, then applies `key=value` overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.system()?;
        self.grid()?;
        self.ue()?;
        self.offset_spec()?;
        if self.range_oversampling == 0 {
            return Err(CliError::Config("range_oversampling must be at least 1".into()));
        }
        if !(self.mainlobe_radius.is_finite() && self.mainlobe_radius >= 0.0) {
            return Err(CliError::Config("mainlobe_radius must be non-negative".into()));
        }
        let sigmas_ok = |v: &[f64]| v.iter().all(|s| s.is_finite() && *s >= 0.0);
        if !sigmas_ok(&self.crlb_sigmas) || !sigmas_ok(&self.pmsr_sigmas) || !sigmas_ok(&[self.saf_sigma]) {
            return Err(CliError::Config("offset spreads must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let config = SystemConfig {
            carrier_frequency: self.carrier_frequency,
            subcarrier_spacing: self.subcarrier_spacing,
            num_subcarriers: self.num_subcarriers,
            num_antennas: self.num_antennas,
            antenna_spacing: self.antenna_spacing,
            num_symbols: self.num_symbols,
            snr: self.snr_db.to_snr(),
            amplitude_model: match self.amplitude_model {
                AmplitudeSetting::Unit => AmplitudeModel::Unit,
                AmplitudeSetting::InverseDistance => AmplitudeModel::InverseDistance,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        Ok(ArrayGeometry::ula(self.num_antennas, self.antenna_spacing)?)
    }

    pub fn ue(&self) -> Result<UeLocation> {
        Ok(UeLocation::new(self.ue_x, self.ue_y)?)
    }

    pub fn offset_spec(&self) -> Result<OffsetSpec> {
        Ok(OffsetSpec::new(self.freq_mean, self.freq_std, self.spatial_half_width, self.seed)?)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        Ok(SpatialGrid::new(
            self.grid_x_min,
            self.grid_x_max,
            self.grid_y_min,
            self.grid_y_max,
            self.grid_step,
        )?)
    }

    pub fn pmsr_seeds(&self) -> Vec<u64> {
        (0..self.pmsr_seed_count as u64).map(|i| self.seed + i).collect()
    }
}

/// `key=value`, where the value is TOML (`1.5`, `[1, 2]`, `"x"`) or a bare string.
fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!("override `{item}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}
