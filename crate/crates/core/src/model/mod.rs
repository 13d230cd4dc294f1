//! System configuration, array geometry, phase-offset sampling and CSI
//! synthesis.

mod config;
mod csi;
mod geometry;
mod offsets;
mod rng;
mod stats;

pub use config::{subcarrier_frequencies, AmplitudeModel, Snr, SystemConfig};
pub(crate) use csi::check_geometry;
pub use csi::{apply_offsets, ideal_response, synthesize_ideal, CsiTensor, Synthesizer};
pub use geometry::{distances, ArrayGeometry, Layout, UeLocation, COINCIDENCE_TOLERANCE};
pub use offsets::{sample_offsets, OffsetRealization, OffsetSpec};
pub use rng::{substream, Substream};
pub use stats::{offset_statistics, OffsetSummary};
