use ndarray::Array1;

use crate::{Error, Result};

/// Minimum UE-to-antenna distance, meters. Closer locations are treated as
/// coincident with the antenna.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-9;

/// A UE position in the array plane, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeLocation {
    pub x: f64,
    pub y: f64,
}

impl UeLocation {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::InvalidConfig(format!("UE location ({x}, {y}) is not finite")));
        }
        Ok(UeLocation { x, y })
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// How the antenna positions were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// Uniform linear array along the x-axis centered on the origin.
    Ula { spacing: f64 },
    Explicit,
}

/// Antenna positions `(x_n, y_n)` in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<(f64, f64)>,
    layout: Layout,
}

impl ArrayGeometry {
    /// `count` antennas spaced `spacing` apart on the x-axis, centered on the
    /// origin, ordered by increasing x.
    pub fn ula(count: usize, spacing: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidConfig("an array needs at least 2 antennas".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidConfig(format!("antenna spacing must be positive, got {spacing}")));
        }
        let center = (count - 1) as f64 / 2.0;
        let positions = (0..count)
            .map(|n| ((n as f64 - center) * spacing, 0.0))
            .collect();
        Ok(ArrayGeometry {
            positions,
            layout: Layout::Ula { spacing },
        })
    }

    pub fn from_positions(positions: Vec<(f64, f64)>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidConfig("an array needs at least 2 antennas".into()));
        }
        if positions.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::InvalidConfig("antenna positions must be finite".into()));
        }
        for (i, a) in positions.iter().enumerate() {
            for b in &positions[i + 1..] {
                if a == b {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate antenna position ({}, {})",
                        a.0, a.1
                    )));
                }
            }
        }
        Ok(ArrayGeometry {
            positions,
            layout: Layout::Explicit,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Distance from `(x, y)` to every antenna, without the coincidence check.
    pub(crate) fn distances_from(&self, x: f64, y: f64) -> impl Iterator<Item = f64> + '_ {
        self.positions.iter().map(move |&(ax, ay)| (x - ax).hypot(y - ay))
    }
}

/// Euclidean distance `d_n` from the UE to each antenna.
pub fn distances(geometry: &ArrayGeometry, loc: &UeLocation) -> Result<Array1<f64>> {
    let d: Array1<f64> = geometry.distances_from(loc.x, loc.y).collect();
    if let Some(antenna) = d.iter().position(|&v| v < COINCIDENCE_TOLERANCE) {
        return Err(Error::CoincidentLocation {
            antenna,
            x: loc.x,
            y: loc.y,
        });
    }
    Ok(d)
}
