use ndarray::{s, Array2, Array3, ArrayView1, Axis, Zip};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::SystemConfig;
use super::geometry::{distances, ArrayGeometry, UeLocation};
use super::offsets::OffsetRealization;
use super::rng::{substream, Substream};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Complex channel observations indexed `(antenna n, subcarrier k, symbol l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTensor {
    data: Array3<Complex64>,
    carrier_frequency: f64,
    subcarrier_spacing: f64,
}

impl CsiTensor {
    pub fn new(data: Array3<Complex64>, carrier_frequency: f64, subcarrier_spacing: f64) -> Result<Self> {
        if data.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidConfig("CSI contains non-finite samples".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput("CSI tensor"));
        }
        Ok(CsiTensor {
            data,
            carrier_frequency,
            subcarrier_spacing,
        })
    }

    /// `(N, K, L)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn num_antennas(&self) -> usize {
        self.data.dim().0
    }

    pub fn num_subcarriers(&self) -> usize {
        self.data.dim().1
    }

    pub fn num_symbols(&self) -> usize {
        self.data.dim().2
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array3<Complex64> {
        self.data
    }

    /// Samples of one antenna/subcarrier over all symbols.
    pub fn series(&self, n: usize, k: usize) -> ArrayView1<'_, Complex64> {
        self.data.slice(s![n, k, ..])
    }

    /// Coherent average over the symbol axis.
    pub fn symbol_mean(&self) -> Array2<Complex64> {
        self.data
            .mean_axis(Axis(2))
            .expect("tensor has at least one symbol")
    }

    /// Checks that the tensor matches the `(N, K)` of a configuration.
    pub fn check_config(&self, config: &SystemConfig) -> Result<()> {
        let (n, k, _) = self.dims();
        if n != config.num_antennas || k != config.num_subcarriers {
            return Err(Error::shape(&[config.num_antennas, config.num_subcarriers], &[n, k]));
        }
        Ok(())
    }
}

/// Noiseless single-symbol response `α_n·exp(-j2π f_k d_n / c)`, `N×K`.
pub fn ideal_response(config: &SystemConfig, geometry: &ArrayGeometry, loc: &UeLocation) -> Result<Array2<Complex64>> {
    config.validate()?;
    check_geometry(config, geometry)?;
    let d = distances(geometry, loc)?;
    let freqs = config.subcarrier_frequencies();
    Ok(Array2::from_shape_fn((config.num_antennas, config.num_subcarriers), |(n, k)| {
        let amplitude = config.amplitude_model.amplitude(d[n]);
        let phase = 2.0 * std::f64::consts::PI * freqs[k] * d[n] / SPEED_OF_LIGHT;
        Complex64::from_polar(amplitude, -phase)
    }))
}

pub(crate) fn check_geometry(config: &SystemConfig, geometry: &ArrayGeometry) -> Result<()> {
    if geometry.len() != config.num_antennas {
        return Err(Error::shape(&[config.num_antennas], &[geometry.len()]));
    }
    Ok(())
}

/// Generates CSI captures: the deterministic response (optionally with phase
/// offsets applied) plus circular Gaussian noise.
///
/// Noise for series `(n, k)` is drawn from its own substream, so series can be
/// produced one at a time, in any order, without holding the whole tensor.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    clean: Array2<Complex64>,
    noise_scale: f64,
    num_symbols: usize,
    seed: u64,
    carrier_frequency: f64,
    subcarrier_spacing: f64,
}

impl Synthesizer {
    pub fn new(
        config: &SystemConfig,
        geometry: &ArrayGeometry,
        loc: &UeLocation,
        offsets: Option<&OffsetRealization>,
        seed: u64,
    ) -> Result<Self> {
        let mut clean = ideal_response(config, geometry, loc)?;
        if let Some(off) = offsets {
            check_offsets(off, config.num_antennas, config.num_subcarriers)?;
            Zip::indexed(&mut clean).for_each(|(n, k), v| {
                *v *= Complex64::cis(off.total(n, k));
            });
        }
        Ok(Synthesizer {
            clean,
            noise_scale: (config.noise_variance() / 2.0).sqrt(),
            num_symbols: config.num_symbols,
            seed,
            carrier_frequency: config.carrier_frequency,
            subcarrier_spacing: config.subcarrier_spacing,
        })
    }

    /// Noiseless per-symbol signal, `N×K`.
    pub fn clean(&self) -> &Array2<Complex64> {
        &self.clean
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    /// Writes the `L` samples of series `(n, k)` into `out`.
    pub fn fill_series(&self, n: usize, k: usize, out: &mut [Complex64]) {
        assert_eq!(out.len(), self.num_symbols, "series buffer must hold L samples");
        let signal = self.clean[[n, k]];
        if self.noise_scale == 0.0 {
            out.fill(signal);
            return;
        }
        let series = (n * self.clean.ncols() + k) as u64;
        let mut rng = substream(self.seed, Substream::Noise { series });
        for v in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = signal + Complex64::new(re, im) * self.noise_scale;
        }
    }

    /// Materializes the whole `N×K×L` capture.
    pub fn tensor(&self) -> CsiTensor {
        let (num_n, num_k) = self.clean.dim();
        let mut data = Array3::zeros((num_n, num_k, self.num_symbols));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.num_symbols];
        for n in 0..num_n {
            for k in 0..num_k {
                self.fill_series(n, k, &mut buf);
                data.slice_mut(s![n, k, ..])
                    .iter_mut()
                    .zip(&buf)
                    .for_each(|(d, v)| *d = *v);
            }
        }
        CsiTensor {
            data,
            carrier_frequency: self.carrier_frequency,
            subcarrier_spacing: self.subcarrier_spacing,
        }
    }
}

fn check_offsets(off: &OffsetRealization, num_antennas: usize, num_subcarriers: usize) -> Result<()> {
    if off.phi_f.dim() != (num_antennas, num_subcarriers) || off.phi_a.len() != num_antennas {
        return Err(Error::shape(
            &[num_antennas, num_subcarriers],
            &[off.phi_f.nrows(), off.phi_f.ncols(), off.phi_a.len()],
        ));
    }
    Ok(())
}

/// Ideal-channel capture `r_nk(l) = α_n·exp(-j2π f_k d_n / c) + w_nk(l)`.
pub fn synthesize_ideal(config: &SystemConfig, geometry: &ArrayGeometry, loc: &UeLocation, seed: u64) -> Result<CsiTensor> {
    Ok(Synthesizer::new(config, geometry, loc, None, seed)?.tensor())
}

/// Multiplies every symbol of entry `(n, k)` by `exp(j(φ^f_nk + φ^a_n))`.
pub fn apply_offsets(csi: &CsiTensor, off: &OffsetRealization) -> Result<CsiTensor> {
    let (num_n, num_k, _) = csi.dims();
    check_offsets(off, num_n, num_k)?;
    let mut data = csi.data.clone();
    for ((n, k, _), v) in data.indexed_iter_mut() {
        *v *= Complex64::cis(off.total(n, k));
    }
    Ok(CsiTensor { data, ..*csi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_offsets, OffsetSpec, Snr};
    use std::f64::consts::PI;

    fn small_config(snr: Snr, symbols: usize) -> SystemConfig {
        SystemConfig {
            num_antennas: 4,
            num_subcarriers: 6,
            num_symbols: symbols,
            snr,
            ..SystemConfig::default()
        }
    }

    fn setup(config: &SystemConfig) -> (ArrayGeometry, UeLocation) {
        (
            ArrayGeometry::ula(config.num_antennas, config.antenna_spacing).unwrap(),
            UeLocation::new(-2.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn noiseless_unit_amplitude_is_unit_modulus() {
        let c = small_config(Snr::Noiseless, 3);
        let (g, loc) = setup(&c);
        let t = synthesize_ideal(&c, &g, &loc, 1).unwrap();
        assert!(t.data().iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn full_cycle_distance_has_zero_phase() {
        let c = SystemConfig {
            num_antennas: 2,
            num_subcarriers: 1,
            num_symbols: 1,
            snr: Snr::Noiseless,
            ..SystemConfig::default()
        };
        let f1 = c.subcarrier_frequencies()[0];
        let wavelength = SPEED_OF_LIGHT / f1;
        let g = ArrayGeometry::from_positions(vec![(0.0, 0.0), (10.0, 0.0)]).unwrap();
        let loc = UeLocation::new(0.0, 100.0 * wavelength).unwrap();
        let r = ideal_response(&c, &g, &loc).unwrap();
        assert!(r[[0, 0]].arg().abs() < 1e-9, "{}", r[[0, 0]].arg());
    }

    #[test]
    fn inverse_distance_amplitude() {
        let mut c = small_config(Snr::Noiseless, 1);
        c.amplitude_model = crate::model::AmplitudeModel::InverseDistance;
        let (g, loc) = setup(&c);
        let r = ideal_response(&c, &g, &loc).unwrap();
        let d = distances(&g, &loc).unwrap();
        for n in 0..4 {
            assert!((r[[n, 0]].norm() - 1.0 / d[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_variance_matches_snr() {
        let c = SystemConfig {
            num_antennas: 2,
            num_subcarriers: 2,
            num_symbols: 10_000,
            snr: Snr::Db(20.0),
            ..SystemConfig::default()
        };
        let (g, loc) = setup(&c);
        let t = synthesize_ideal(&c, &g, &loc, 5).unwrap();
        let clean = ideal_response(&c, &g, &loc).unwrap();
        let half = c.noise_variance() / 2.0;
        for n in 0..2 {
            for k in 0..2 {
                let w: Vec<Complex64> = t.series(n, k).iter().map(|v| v - clean[[n, k]]).collect();
                let var = |f: fn(&Complex64) -> f64| {
                    let m = w.iter().map(f).sum::<f64>() / w.len() as f64;
                    w.iter().map(|v| (f(v) - m).powi(2)).sum::<f64>() / (w.len() - 1) as f64
                };
                let vr = var(|v| v.re);
                let vi = var(|v| v.im);
                assert!((vr / half - 1.0).abs() < 0.05, "re variance {vr}");
                assert!((vi / half - 1.0).abs() < 0.05, "im variance {vi}");
            }
        }
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let c = small_config(Snr::Db(10.0), 20);
        let (g, loc) = setup(&c);
        let a = synthesize_ideal(&c, &g, &loc, 9).unwrap();
        let b = synthesize_ideal(&c, &g, &loc, 9).unwrap();
        let d = synthesize_ideal(&c, &g, &loc, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn offsets_round_trip_and_identity() {
        let c = small_config(Snr::Db(10.0), 5);
        let (g, loc) = setup(&c);
        let t = synthesize_ideal(&c, &g, &loc, 2).unwrap();
        let zero = OffsetRealization::zeros(4, 6);
        assert_eq!(apply_offsets(&t, &zero).unwrap(), t);

        let spec = OffsetSpec::new(0.0, 0.8, 2.0, 4).unwrap();
        let off = sample_offsets(&spec, 4, 6).unwrap();
        let shifted = apply_offsets(&t, &off).unwrap();
        for ((n, k, l), v) in shifted.data().indexed_iter() {
            let back = v * Complex64::cis(-off.total(n, k));
            let orig = t.data()[[n, k, l]];
            assert!((back - orig).norm() <= 1e-12 * orig.norm());
        }
    }

    #[test]
    fn pi_offsets_flip_sign() {
        let c = small_config(Snr::Noiseless, 2);
        let (g, loc) = setup(&c);
        let t = synthesize_ideal(&c, &g, &loc, 2).unwrap();
        let mut off = OffsetRealization::zeros(4, 6);
        off.phi_f.fill(PI);
        let flipped = apply_offsets(&t, &off).unwrap();
        for (a, b) in flipped.data().iter().zip(t.data()) {
            assert!((a + b).norm() < 1e-15);
        }
    }

    #[test]
    fn offsets_preserve_modulus_and_are_time_consistent() {
        let c = small_config(Snr::Noiseless, 7);
        let (g, loc) = setup(&c);
        let t = synthesize_ideal(&c, &g, &loc, 2).unwrap();
        let off = sample_offsets(&OffsetSpec::new(0.0, 1.0, 3.0, 8).unwrap(), 4, 6).unwrap();
        let shifted = apply_offsets(&t, &off).unwrap();
        for (a, b) in shifted.data().iter().zip(t.data()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        for n in 0..4 {
            for k in 0..6 {
                let s = shifted.series(n, k);
                assert!(s.iter().all(|v| *v == s[0]));
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let c = small_config(Snr::Noiseless, 1);
        let (g, loc) = setup(&c);
        let t = synthesize_ideal(&c, &g, &loc, 0).unwrap();
        let off = OffsetRealization::zeros(4, 5);
        assert!(matches!(apply_offsets(&t, &off), Err(Error::ShapeMismatch { .. })));
        let wrong_geometry = ArrayGeometry::ula(5, 0.07).unwrap();
        assert!(ideal_response(&c, &wrong_geometry, &loc).is_err());
    }

    #[test]
    fn streaming_series_match_tensor() {
        let c = small_config(Snr::Db(5.0), 11);
        let (g, loc) = setup(&c);
        let synth = Synthesizer::new(&c, &g, &loc, None, 77).unwrap();
        let t = synth.tensor();
        let mut buf = vec![Complex64::new(0.0, 0.0); 11];
        synth.fill_series(3, 2, &mut buf);
        assert_eq!(t.series(3, 2).to_vec(), buf);
    }
}
