//! Extrinsic phase calibration from a capture of a UE at a known location.
//!
//! Frequency offsets come from a least-squares fit of each antenna/subcarrier
//! series against the noiseless model. Spatial offsets come from the
//! line-of-sight value of a range matched filter, compared with the carrier
//! steering phase.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::model::{distances, ideal_response, ArrayGeometry, CsiTensor, SystemConfig, UeLocation};
use crate::{wrap_phase, Error, Result, SPEED_OF_LIGHT};

pub const DEFAULT_RANGE_OVERSAMPLING: usize = 8;

/// Running per-series sums over the symbol axis.
///
/// Holds `Σ_l r(l)` and `Σ_l |r(l)|²` for every `(n, k)`, so a capture can be
/// consumed one series at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStatistics {
    pub sum: Array2<Complex64>,
    pub sum_sq: Array2<f64>,
    pub num_symbols: usize,
}

impl SymbolStatistics {
    pub fn new(num_antennas: usize, num_subcarriers: usize, num_symbols: usize) -> Self {
        SymbolStatistics {
            sum: Array2::zeros((num_antennas, num_subcarriers)),
            sum_sq: Array2::zeros((num_antennas, num_subcarriers)),
            num_symbols,
        }
    }

    pub fn from_tensor(csi: &CsiTensor) -> Self {
        let (n, k, l) = csi.dims();
        let mut stats = Self::new(n, k, l);
        for a in 0..n {
            for b in 0..k {
                stats.add_series(a, b, csi.series(a, b));
            }
        }
        stats
    }

    /// Adds the samples of series `(n, k)`; may be called repeatedly with
    /// consecutive blocks of the same series.
    pub fn add_series<'a>(&mut self, n: usize, k: usize, samples: impl IntoIterator<Item = &'a Complex64>) {
        let (mut s, mut q) = (Complex64::new(0.0, 0.0), 0.0);
        for v in samples {
            s += v;
            q += v.norm_sqr();
        }
        self.sum[[n, k]] += s;
        self.sum_sq[[n, k]] += q;
    }

    /// Coherent mean over symbols.
    pub fn mean(&self) -> Array2<Complex64> {
        self.sum.mapv(|v| v / self.num_symbols as f64)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.sum.dim()
    }
}

/// Least-squares frequency-offset estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyOffsets {
    /// `arg(r_nkᴴ r̃_nk / r_nkᴴ r_nk)`, wrapped to `(-π, π]`.
    pub phi_f_hat: Array2<f64>,
    /// `|r_nkᴴ r̃_nk| / r_nkᴴ r_nk`.
    pub ratio_magnitude: Array2<f64>,
    /// Mean residual power `(1/L)·Σ_l |r̃_nk(l) − e^{jφ̂} r_nk|²`.
    pub residual_power: Array2<f64>,
}

impl FrequencyOffsets {
    /// Splits the estimates into a per-antenna common phase (circular mean
    /// over subcarriers) and the remaining subcarrier-dependent part.
    pub fn split_common_phase(&self) -> (Array1<f64>, Array2<f64>) {
        let common: Array1<f64> = self
            .phi_f_hat
            .outer_iter()
            .map(|row| row.iter().map(|&p| Complex64::cis(p)).sum::<Complex64>().arg())
            .collect();
        let centered = Array2::from_shape_fn(self.phi_f_hat.dim(), |(n, k)| {
            wrap_phase(self.phi_f_hat[[n, k]] - common[n])
        });
        (common, centered)
    }
}

/// Least-squares fit of each measured series against the noiseless model.
pub fn estimate_frequency_offsets(
    measured: &CsiTensor,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
) -> Result<FrequencyOffsets> {
    measured.check_config(config)?;
    let template = ideal_response(config, geometry, true_loc)?;
    estimate_frequency_offsets_from_statistics(&SymbolStatistics::from_tensor(measured), &template)
}

/// Frequency-offset fit from accumulated symbol sums and the model template.
pub fn estimate_frequency_offsets_from_statistics(
    stats: &SymbolStatistics,
    template: &Array2<Complex64>,
) -> Result<FrequencyOffsets> {
    if stats.dims() != template.dim() {
        let (n, k) = template.dim();
        let (a, b) = stats.dims();
        return Err(Error::shape(&[n, k], &[a, b]));
    }
    if stats.num_symbols == 0 {
        return Err(Error::EmptyInput("symbols"));
    }
    let l = stats.num_symbols as f64;
    let shape = template.dim();
    let mut phi_f_hat = Array2::zeros(shape);
    let mut ratio_magnitude = Array2::zeros(shape);
    let mut residual_power = Array2::zeros(shape);
    for ((n, k), t) in template.indexed_iter() {
        let energy = t.norm_sqr();
        if energy == 0.0 {
            return Err(Error::ZeroTemplate {
                antenna: n,
                subcarrier: k,
            });
        }
        let sum = stats.sum[[n, k]];
        let ratio = t.conj() * sum / (l * energy);
        let phi = wrap_phase(ratio.arg());
        let fitted = Complex64::cis(phi) * t;
        let residual = stats.sum_sq[[n, k]] - 2.0 * (fitted.conj() * sum).re + l * energy;
        phi_f_hat[[n, k]] = phi;
        ratio_magnitude[[n, k]] = ratio.norm();
        residual_power[[n, k]] = (residual / l).max(0.0);
    }
    Ok(FrequencyOffsets {
        phi_f_hat,
        ratio_magnitude,
        residual_power,
    })
}

fn check_table(shape: (usize, usize), table: &Array2<f64>) -> Result<()> {
    if table.dim() != shape {
        return Err(Error::shape(&[shape.0, shape.1], &[table.nrows(), table.ncols()]));
    }
    Ok(())
}

/// Multiplies every symbol of `(n, k)` by `exp(-jφ̂_nk)`.
pub fn compensate_frequency(measured: &CsiTensor, phi_f_hat: &Array2<f64>) -> Result<CsiTensor> {
    let (n, k, _) = measured.dims();
    check_table((n, k), phi_f_hat)?;
    let mut data = measured.data().clone();
    for ((a, b, _), v) in data.indexed_iter_mut() {
        *v *= Complex64::cis(-phi_f_hat[[a, b]]);
    }
    CsiTensor::new(data, measured.carrier_frequency(), measured.subcarrier_spacing())
}

/// [`compensate_frequency`] for a single `N×K` snapshot.
pub fn compensate_frequency_snapshot(snapshot: &Array2<Complex64>, phi_f_hat: &Array2<f64>) -> Result<Array2<Complex64>> {
    check_table(snapshot.dim(), phi_f_hat)?;
    Ok(Array2::from_shape_fn(snapshot.dim(), |(n, k)| {
        snapshot[[n, k]] * Complex64::cis(-phi_f_hat[[n, k]])
    }))
}

/// Per-antenna range profiles and their line-of-sight readout.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    /// `N × M` complex profile over `d_m = m·bin_spacing`.
    pub profiles: Array2<Complex64>,
    pub bin_spacing: f64,
    pub peak_bins: Vec<usize>,
    pub los_values: Array1<Complex64>,
}

impl RangeProfile {
    pub fn num_bins(&self) -> usize {
        self.profiles.ncols()
    }

    /// Range of the peak bin of antenna `n`.
    pub fn peak_range(&self, n: usize) -> f64 {
        self.peak_bins[n] as f64 * self.bin_spacing
    }
}

/// `r_n(d) = Σ_k s_nk·exp(+j2πΔf k d / c)` over `d ∈ [0, c/Δf)`.
///
/// The grid has `K·oversampling` bins spaced `c/(K·Δf·oversampling)`. The
/// line-of-sight value is the profile at the largest-magnitude bin (first
/// such bin on ties).
pub fn range_matched_filter(
    snapshot: &Array2<Complex64>,
    config: &SystemConfig,
    oversampling: usize,
) -> Result<RangeProfile> {
    config.validate()?;
    let (num_n, num_k) = snapshot.dim();
    if num_n != config.num_antennas || num_k != config.num_subcarriers {
        return Err(Error::shape(&[config.num_antennas, config.num_subcarriers], &[num_n, num_k]));
    }
    if oversampling == 0 {
        return Err(Error::InvalidConfig("range oversampling must be at least 1".into()));
    }
    let bins = num_k * oversampling;
    // Δf·k·d_m/c = k·m / bins, so the twiddle only depends on k·m mod bins.
    let twiddles: Vec<Complex64> = (0..bins)
        .map(|i| Complex64::cis(2.0 * PI * i as f64 / bins as f64))
        .collect();
    let mut profiles = Array2::zeros((num_n, bins));
    for (row, mut out) in snapshot.outer_iter().zip(profiles.outer_iter_mut()) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = row
                .iter()
                .enumerate()
                .map(|(k, s)| s * twiddles[((k + 1) * m) % bins])
                .sum::<Complex64>();
        }
    }
    let peak_bins: Vec<usize> = profiles
        .outer_iter()
        .map(|row| {
            let mut best = (0, f64::NEG_INFINITY);
            for (m, v) in row.iter().enumerate() {
                if v.norm_sqr() > best.1 {
                    best = (m, v.norm_sqr());
                }
            }
            best.0
        })
        .collect();
    let los_values = peak_bins
        .iter()
        .enumerate()
        .map(|(n, &m)| profiles[[n, m]])
        .collect();
    Ok(RangeProfile {
        profiles,
        bin_spacing: config.range_resolution() / oversampling as f64,
        peak_bins,
        los_values,
    })
}

/// Carrier-only line-of-sight template `exp(-j2π f_c d_n / c)`.
pub fn los_template(config: &SystemConfig, geometry: &ArrayGeometry, true_loc: &UeLocation) -> Result<Array1<Complex64>> {
    let d = distances(geometry, true_loc)?;
    Ok(d.mapv(|d| Complex64::cis(-2.0 * PI * config.carrier_frequency * d / SPEED_OF_LIGHT)))
}

/// `φ̂_n = arg(los_n · conj(template_n))`; the ratio magnitude is discarded.
pub fn estimate_spatial_offsets(
    los_values: ArrayView1<'_, Complex64>,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
) -> Result<Array1<f64>> {
    if los_values.len() != geometry.len() {
        return Err(Error::shape(&[geometry.len()], &[los_values.len()]));
    }
    let template = los_template(config, geometry, true_loc)?;
    los_values
        .iter()
        .zip(&template)
        .enumerate()
        .map(|(n, (v, t))| {
            if v.norm() == 0.0 || !v.norm().is_finite() {
                return Err(Error::ZeroLosValue(n));
            }
            Ok(wrap_phase((v * t.conj()).arg()))
        })
        .collect()
}

/// `r̂_n = r̃_n·exp(-jφ̂_n)`.
pub fn compensate_spatial(los_values: ArrayView1<'_, Complex64>, phi_a_hat: &Array1<f64>) -> Result<Array1<Complex64>> {
    if los_values.len() != phi_a_hat.len() {
        return Err(Error::shape(&[phi_a_hat.len()], &[los_values.len()]));
    }
    Ok(los_values
        .iter()
        .zip(phi_a_hat)
        .map(|(v, p)| v * Complex64::cis(-p))
        .collect())
}

/// Estimated phase tables, reusable on later captures.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTables {
    pub phi_f_hat: Array2<f64>,
    pub phi_a_hat: Array1<f64>,
    pub residual_power: Array2<f64>,
}

impl CalibrationTables {
    pub fn zeros(num_antennas: usize, num_subcarriers: usize) -> Self {
        CalibrationTables {
            phi_f_hat: Array2::zeros((num_antennas, num_subcarriers)),
            phi_a_hat: Array1::zeros(num_antennas),
            residual_power: Array2::zeros((num_antennas, num_subcarriers)),
        }
    }

    /// Writes `n,k,phi_f_hat,residual_power` rows.
    pub fn write_frequency_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,k,phi_f_hat,residual_power")?;
        for ((n, k), p) in self.phi_f_hat.indexed_iter() {
            writeln!(out, "{n},{k},{p},{}", self.residual_power[[n, k]])?;
        }
        Ok(())
    }

    /// Writes `n,phi_a_hat` rows.
    pub fn write_spatial_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,phi_a_hat")?;
        for (n, p) in self.phi_a_hat.iter().enumerate() {
            writeln!(out, "{n},{p}")?;
        }
        Ok(())
    }

    /// Reads both tables. `#` comment lines are skipped; the residual column
    /// is optional and defaults to zero.
    pub fn read_csv<F: BufRead, S: BufRead>(frequency: F, spatial: S) -> Result<Self> {
        let freq_rows = parse_rows(frequency, &["n", "k", "phi_f_hat"], &["residual_power"])?;
        let spatial_rows = parse_rows(spatial, &["n", "phi_a_hat"], &[])?;
        let num_n = freq_rows.iter().map(|r| r[0] as usize + 1).max().unwrap_or(0);
        let num_k = freq_rows.iter().map(|r| r[1] as usize + 1).max().unwrap_or(0);
        if freq_rows.len() != num_n * num_k || spatial_rows.len() != num_n {
            return Err(Error::Parse(format!(
                "incomplete tables: {} frequency rows for {num_n}x{num_k}, {} spatial rows",
                freq_rows.len(),
                spatial_rows.len()
            )));
        }
        let mut tables = CalibrationTables::zeros(num_n, num_k);
        for r in &freq_rows {
            let idx = [r[0] as usize, r[1] as usize];
            tables.phi_f_hat[idx] = check_phase(r[2])?;
            tables.residual_power[idx] = r.get(3).copied().unwrap_or(0.0);
        }
        for r in &spatial_rows {
            let n = r[0] as usize;
            if n >= num_n {
                return Err(Error::Parse(format!("spatial row for antenna {n} out of range")));
            }
            tables.phi_a_hat[n] = check_phase(r[1])?;
        }
        Ok(tables)
    }
}

fn check_phase(v: f64) -> Result<f64> {
    if !(v.is_finite() && v > -PI - 1e-12 && v <= PI + 1e-12) {
        return Err(Error::Parse(format!("phase {v} outside (-pi, pi]")));
    }
    Ok(v)
}

fn parse_rows<R: BufRead>(input: R, required: &[&str], optional: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.starts_with('#') && !s.trim().is_empty()));
    let header = lines.next().ok_or(Error::EmptyInput("calibration table"))??;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let width = columns.len();
    if width < required.len() || columns[..required.len()] != *required || columns[required.len()..] != optional[..width - required.len()] {
        return Err(Error::Parse(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{line}`: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != width || values.iter().take(required.len() - 1).any(|v| *v < 0.0 || v.fract() != 0.0) {
            return Err(Error::Parse(format!("malformed row `{line}`")));
        }
        rows.push(values);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibrationOptions {
    pub range_oversampling: usize,
    /// Apply the subcarrier-dependent frequency correction before the range
    /// filter.
    pub compensate_frequency: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            range_oversampling: DEFAULT_RANGE_OVERSAMPLING,
            compensate_frequency: true,
        }
    }
}

/// Everything the pipeline computes, stage by stage.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutput {
    /// Raw least-squares estimates.
    pub frequency: FrequencyOffsets,
    /// Tables actually applied.
    pub tables: CalibrationTables,
    /// Symbol-averaged capture before any correction.
    pub averaged: Array2<Complex64>,
    /// Symbol-averaged capture after frequency correction.
    pub frequency_compensated: Array2<Complex64>,
    /// Range profile of `frequency_compensated`.
    pub range_profile: RangeProfile,
    /// Line-of-sight values of the uncorrected average.
    pub los_uncalibrated: Array1<Complex64>,
    /// Line-of-sight values after the spatial correction.
    pub calibrated_los: Array1<Complex64>,
}

impl CalibrationOutput {
    /// Line-of-sight values after frequency correction only.
    pub fn los_frequency_only(&self) -> &Array1<Complex64> {
        &self.range_profile.los_values
    }
}

/// Full calibration of a capture: frequency fit and correction, symbol
/// averaging, range matched filter, spatial fit and correction.
pub fn calibrate_pipeline(
    measured: &CsiTensor,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    options: &CalibrationOptions,
) -> Result<CalibrationOutput> {
    measured.check_config(config)?;
    calibrate_from_statistics(&SymbolStatistics::from_tensor(measured), config, geometry, true_loc, options)
}

/// [`calibrate_pipeline`] from accumulated symbol sums.
///
/// Frequency correction is applied to the per-antenna centred estimates:
/// the least-squares phase also absorbs the spatial offset, which is constant
/// across subcarriers, so that part is left for the spatial step.
pub fn calibrate_from_statistics(
    stats: &SymbolStatistics,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    options: &CalibrationOptions,
) -> Result<CalibrationOutput> {
    let template = ideal_response(config, geometry, true_loc)?;
    let frequency = estimate_frequency_offsets_from_statistics(stats, &template)?;
    let (_, centered) = frequency.split_common_phase();
    let applied = if options.compensate_frequency {
        centered
    } else {
        Array2::zeros(template.dim())
    };
    let averaged = stats.mean();
    let frequency_compensated = compensate_frequency_snapshot(&averaged, &applied)?;
    let los_uncalibrated = range_matched_filter(&averaged, config, options.range_oversampling)?.los_values;
    let range_profile = range_matched_filter(&frequency_compensated, config, options.range_oversampling)?;
    let phi_a_hat = estimate_spatial_offsets(range_profile.los_values.view(), config, geometry, true_loc)?;
    let calibrated_los = compensate_spatial(range_profile.los_values.view(), &phi_a_hat)?;
    Ok(CalibrationOutput {
        tables: CalibrationTables {
            phi_f_hat: applied,
            phi_a_hat,
            residual_power: frequency.residual_power.clone(),
        },
        frequency,
        averaged,
        frequency_compensated,
        range_profile,
        los_uncalibrated,
        calibrated_los,
    })
}
