use crate::{Error, Result, SPEED_OF_LIGHT};

/// Per-antenna path amplitude law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeModel {
    /// `α_n = 1` for every antenna.
    #[default]
    Unit,
    /// `α_n = 1 / d_n`, unit amplitude at one meter.
    InverseDistance,
}

impl AmplitudeModel {
    pub fn amplitude(self, distance: f64) -> f64 {
        match self {
            AmplitudeModel::Unit => 1.0,
            AmplitudeModel::InverseDistance => 1.0 / distance,
        }
    }

    /// `d ln α / d d`.
    pub fn log_slope(self, distance: f64) -> f64 {
        match self {
            AmplitudeModel::Unit => 0.0,
            AmplitudeModel::InverseDistance => -1.0 / distance,
        }
    }
}

/// Signal-to-noise ratio of one antenna/subcarrier/symbol sample, referenced
/// to the unit-distance amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Noiseless,
    Db(f64),
}

impl Snr {
    /// Complex noise variance `σ_n² = α² / 10^(snr/10)` with `α = 1`.
    pub fn noise_variance(self) -> f64 {
        match self {
            Snr::Noiseless => 0.0,
            Snr::Db(db) => 10f64.powf(-db / 10.0),
        }
    }
}

/// Carrier, subcarrier, array and noise parameters of the uplink.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Carrier frequency `f_c` in Hz.
    pub carrier_frequency: f64,
    /// Subcarrier spacing `Δf` in Hz.
    pub subcarrier_spacing: f64,
    /// Number of subcarriers `K`.
    pub num_subcarriers: usize,
    /// Number of receive antennas `N`.
    pub num_antennas: usize,
    /// Element spacing of the uniform linear array in meters.
    pub antenna_spacing: f64,
    /// Number of OFDM symbols `L` per capture.
    pub num_symbols: usize,
    pub snr: Snr,
    pub amplitude_model: AmplitudeModel,
}

impl Default for SystemConfig {
    /// The 3.5 GHz, 18 MHz, 64-antenna testbed configuration.
    fn default() -> Self {
        SystemConfig {
            carrier_frequency: 3.5e9,
            subcarrier_spacing: 180e3,
            num_subcarriers: 100,
            num_antennas: 64,
            antenna_spacing: 0.07,
            num_symbols: 10_000,
            snr: Snr::Db(20.0),
            amplitude_model: AmplitudeModel::Unit,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be finite and positive, got {v}")))
            }
        };
        positive("carrier_frequency", self.carrier_frequency)?;
        positive("subcarrier_spacing", self.subcarrier_spacing)?;
        positive("antenna_spacing", self.antenna_spacing)?;
        if self.num_subcarriers < 1 {
            return Err(Error::InvalidConfig("num_subcarriers must be at least 1".into()));
        }
        if self.num_antennas < 2 {
            return Err(Error::InvalidConfig("num_antennas must be at least 2".into()));
        }
        if self.num_symbols < 1 {
            return Err(Error::InvalidConfig("num_symbols must be at least 1".into()));
        }
        if let Snr::Db(db) = self.snr {
            if !db.is_finite() {
                return Err(Error::InvalidConfig(format!("snr_db must be finite, got {db}")));
            }
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        self.snr.noise_variance()
    }

    /// Subcarrier frequencies `f_k = f_c + Δf·k` for `k = 1..=K`.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        subcarrier_frequencies(self.carrier_frequency, self.subcarrier_spacing, self.num_subcarriers)
    }

    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Range resolution `c / (K·Δf)` of the subcarrier comb.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (self.num_subcarriers as f64 * self.subcarrier_spacing)
    }

    pub fn with_antennas(&self, num_antennas: usize) -> Self {
        SystemConfig {
            num_antennas,
            ..self.clone()
        }
    }

    pub fn with_snr(&self, snr: Snr) -> Self {
        SystemConfig { snr, ..self.clone() }
    }

    pub fn with_symbols(&self, num_symbols: usize) -> Self {
        SystemConfig {
            num_symbols,
            ..self.clone()
        }
    }
}

/// `f_k = f_c + Δf·k`, `k = 1..=K`. Subcarriers are indexed from one, not
/// centered on the carrier.
pub fn subcarrier_frequencies(carrier: f64, spacing: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| carrier + spacing * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_subcarrier_is_one_spacing_above_carrier() {
        let f = SystemConfig::default().subcarrier_frequencies();
        assert_eq!(f.len(), 100);
        assert_eq!(f[0], 3.50018e9);
    }

    #[test]
    fn zero_spacing_degenerates_to_carrier() {
        let f = subcarrier_frequencies(3.5e9, 0.0, 5);
        assert!(f.iter().all(|&v| v == 3.5e9));
    }

    #[test]
    fn span_of_comb() {
        let f = SystemConfig::default().subcarrier_frequencies();
        let span = f[99] - f[0];
        assert!((span - 99.0 * 180e3).abs() < 1e-3);
        assert!((span - 17.82e6).abs() < 1e-3);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn noise_variance_from_snr() {
        assert_eq!(Snr::Noiseless.noise_variance(), 0.0);
        assert!((Snr::Db(20.0).noise_variance() - 0.01).abs() < 1e-15);
        assert!((Snr::Db(0.0).noise_variance() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn range_resolution_of_testbed() {
        let r = SystemConfig::default().range_resolution();
        assert!((r - 16.655).abs() < 1e-3, "{r}");
    }

    #[test]
    fn validation_rejects_bad_values() {
        let base = SystemConfig::default();
        assert!(base.validate().is_ok());
        assert!(base.with_antennas(1).validate().is_err());
        assert!(base.with_symbols(0).validate().is_err());
        let mut c = base.clone();
        c.subcarrier_spacing = 0.0;
        assert!(c.validate().is_err());
        c = base.clone();
        c.num_subcarriers = 0;
        assert!(c.validate().is_err());
        c = base.clone();
        c.antenna_spacing = -0.07;
        assert!(c.validate().is_err());
        c = base;
        c.snr = Snr::Db(f64::NAN);
        assert!(c.validate().is_err());
    }
}
