//! Localization from calibrated line-of-sight values.

use ndarray::ArrayView1;
use num_complex::Complex64;

use crate::model::{ArrayGeometry, SystemConfig, UeLocation};
use crate::saf::{carrier_image, SafMap, SpatialGrid, DEFAULT_MAINLOBE_RADIUS};
use crate::{Error, Result};

pub use crate::saf::refine_peak;

/// Carrier-only matched-filter image `|Σ_n v_n·exp(+j2π f_c d_n(x,y)/c)|²`.
pub fn localization_image(
    los: ArrayView1<'_, Complex64>,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    grid: &SpatialGrid,
) -> Result<SafMap> {
    config.validate()?;
    let values: Vec<Complex64> = los.iter().copied().collect();
    let power = carrier_image(&values, config.carrier_frequency, geometry, grid)?;
    SafMap::from_power(*grid, power, DEFAULT_MAINLOBE_RADIUS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub image: SafMap,
    /// Refined image peak.
    pub estimate: (f64, f64),
    pub ground_truth: (f64, f64),
    /// Euclidean distance between estimate and truth, meters.
    pub error: f64,
    pub pmsr_db: Option<f64>,
}

/// Builds the image, refines its peak and scores it against the truth.
pub fn locate(
    los: ArrayView1<'_, Complex64>,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    grid: &SpatialGrid,
    truth: &UeLocation,
    mainlobe_radius: f64,
) -> Result<LocalizationResult> {
    let image = localization_image(los, config, geometry, grid)?.with_mainlobe_radius(mainlobe_radius);
    let estimate = image.peak_location;
    Ok(LocalizationResult {
        estimate,
        ground_truth: (truth.x, truth.y),
        error: truth.distance_to(estimate.0, estimate.1),
        pmsr_db: image.pmsr_db,
        image,
    })
}

/// Root-mean-square of per-capture errors.
pub fn score(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("localization errors"));
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

pub fn rms_error(results: &[LocalizationResult]) -> Result<f64> {
    score(&results.iter().map(|r| r.error).collect::<Vec<_>>())
}
