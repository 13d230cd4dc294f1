//! Localization under phase incoherence for OFDM massive-MIMO uplinks.
//!
//! The crate models a static single-antenna UE observed by an antenna array
//! over `K` subcarriers and `L` symbols, with two families of hardware phase
//! offsets: per antenna-subcarrier ("frequency") offsets and per antenna
//! ("spatial") offsets.
//!
//! - [`model`] holds the system configuration, geometry, offset sampling and
//!   CSI synthesis.
//! - [`crlb`] computes the prior-augmented Fisher information, marginalizes
//!   the nuisance phases and reports the localization RMSE bound.
//! - [`saf`] evaluates the spatial ambiguity function and its
//!   peak-to-median-sidelobe ratio.
//! - [`calib`] estimates and removes both offset families from measured CSI
//!   given a known transmitter location.
//! - [`locate`] forms localization images from line-of-sight vectors and
//!   scores estimates against ground truth.

pub mod calib;
pub mod crlb;
mod error;
pub mod locate;
pub mod model;
pub mod saf;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wraps a phase into `(-π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut wrapped = phase.rem_euclid(TAU);
    if wrapped > PI {
        wrapped -= TAU;
    }
    if wrapped <= -PI {
        wrapped += TAU;
    }
    wrapped
}

/// Lower-middle median of a list of values. Returns `None` when empty.
///
/// For even counts this is the element at rank `(n - 1) / 2` of the sorted
/// list, which keeps the result a member of the input.
pub fn lower_median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let rank = (values.len() - 1) / 2;
    let (_, median, _) = values.select_nth_unstable_by(rank, f64::total_cmp);
    Some(*median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-0.5 - 4.0 * PI) + 0.5).abs() < 1e-12);
        for i in -100..100 {
            let w = wrap_phase(i as f64 * 0.37);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn lower_median_conventions() {
        assert_eq!(lower_median(&mut []), None);
        assert_eq!(lower_median(&mut [3.0]), Some(3.0));
        assert_eq!(lower_median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&mut [5.0, 1.0, 3.0]), Some(3.0));
    }
}
