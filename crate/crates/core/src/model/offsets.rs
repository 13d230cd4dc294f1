use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use super::rng::{substream, Substream};
use crate::{Error, Result};

/// Distribution parameters of the two offset families.
///
/// Frequency offsets `φ^f_nk ~ N(μ, σ_f²)`, spatial offsets
/// `φ^a_n ~ U(-Δ, Δ)` with standard deviation `Δ/√3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetSpec {
    pub freq_mean: f64,
    pub freq_std: f64,
    pub spatial_half_width: f64,
    pub seed: u64,
}

impl OffsetSpec {
    pub fn new(freq_mean: f64, freq_std: f64, spatial_half_width: f64, seed: u64) -> Result<Self> {
        let spec = OffsetSpec {
            freq_mean,
            freq_std,
            spatial_half_width,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// No offsets at all.
    pub fn ideal(seed: u64) -> Self {
        OffsetSpec {
            freq_mean: 0.0,
            freq_std: 0.0,
            spatial_half_width: 0.0,
            seed,
        }
    }

    /// Zero-mean frequency offsets with standard deviation `std` only.
    pub fn frequency(std: f64, seed: u64) -> Result<Self> {
        OffsetSpec::new(0.0, std, 0.0, seed)
    }

    /// Spatial offsets only, parameterized by their standard deviation:
    /// `Δ = √3·std`.
    pub fn spatial(std: f64, seed: u64) -> Result<Self> {
        OffsetSpec::new(0.0, 0.0, 3f64.sqrt() * std, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.freq_mean.is_finite() {
            return Err(Error::InvalidConfig("freq_mean must be finite".into()));
        }
        if !(self.freq_std.is_finite() && self.freq_std >= 0.0) {
            return Err(Error::InvalidConfig(format!("freq_std must be >= 0, got {}", self.freq_std)));
        }
        // A hair of slack so that Δ = √3·(π/√3) survives rounding.
        if !(self.spatial_half_width >= 0.0 && self.spatial_half_width <= PI * (1.0 + 1e-12)) {
            return Err(Error::InvalidConfig(format!(
                "spatial_half_width must lie in [0, π], got {}",
                self.spatial_half_width
            )));
        }
        Ok(())
    }

    pub fn spatial_std(&self) -> f64 {
        self.spatial_half_width / 3f64.sqrt()
    }
}

/// One draw of the offsets: `phi_f` is `N×K`, `phi_a` has length `N`.
/// Both are constant over the symbol index.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetRealization {
    pub phi_f: Array2<f64>,
    pub phi_a: Array1<f64>,
}

impl OffsetRealization {
    pub fn zeros(num_antennas: usize, num_subcarriers: usize) -> Self {
        OffsetRealization {
            phi_f: Array2::zeros((num_antennas, num_subcarriers)),
            phi_a: Array1::zeros(num_antennas),
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.phi_a.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.phi_f.ncols()
    }

    /// Total phase `φ^f_nk + φ^a_n` of one entry.
    pub fn total(&self, n: usize, k: usize) -> f64 {
        self.phi_f[[n, k]] + self.phi_a[n]
    }
}

/// Draws a realization from `spec`. Frequency and spatial offsets come from
/// separate substreams of `spec.seed`, filled in antenna-major order.
pub fn sample_offsets(spec: &OffsetSpec, num_antennas: usize, num_subcarriers: usize) -> Result<OffsetRealization> {
    spec.validate()?;
    let mut rng_f = substream(spec.seed, Substream::FrequencyOffsets);
    let phi_f = Array2::from_shape_simple_fn((num_antennas, num_subcarriers), || {
        let z: f64 = rng_f.sample(StandardNormal);
        spec.freq_mean + spec.freq_std * z
    });
    let mut rng_a = substream(spec.seed, Substream::SpatialOffsets);
    let phi_a = Array1::from_shape_simple_fn(num_antennas, || {
        let u: f64 = rng_a.random();
        (2.0 * u - 1.0) * spec.spatial_half_width
    });
    Ok(OffsetRealization { phi_f, phi_a })
}
