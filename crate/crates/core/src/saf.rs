//! Spatial ambiguity function (SAF) maps and peak-to-median-sidelobe ratio.
//!
//! A map is the matched-filter power
//! `|Σ_n Σ_k s_nk·exp(+j2π f_k d_n(x,y)/c)|²` over a rectangular grid.
//! The per-antenna subcarrier sum is a degree-`K` polynomial in
//! `exp(j2πΔf d/c)`. It is evaluated exactly (Horner), through a Chebyshev
//! interpolant in `d` (general snapshots), or in closed form (Dirichlet
//! kernel) when the snapshot phase is linear in `k`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::crlb::NuisanceKind;
use crate::model::{
    check_geometry, distances, ideal_response, sample_offsets, ArrayGeometry, OffsetRealization, OffsetSpec,
    SystemConfig, UeLocation, COINCIDENCE_TOLERANCE,
};
use crate::{lower_median, Error, Result, SPEED_OF_LIGHT};

pub const DEFAULT_MAINLOBE_RADIUS: f64 = 0.5;

/// Cut values below this many dB under the peak are clamped.
pub const CUT_FLOOR_DB: f64 = -300.0;

/// Regular grid of candidate positions, `x` along axis 0 and `y` along axis 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
}

impl Default for SpatialGrid {
    /// `x ∈ [-5, 5]`, `y ∈ [0.5, 8]`, 2 cm step.
    fn default() -> Self {
        SpatialGrid {
            x_min: -5.0,
            x_max: 5.0,
            y_min: 0.5,
            y_max: 8.0,
            step: 0.02,
        }
    }
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, step: f64) -> Result<Self> {
        let grid = SpatialGrid {
            x_min,
            x_max,
            y_min,
            y_max,
            step,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Square grid of `cells × cells` nodes centred on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, step: f64, cells: usize) -> Result<Self> {
        let half = step * (cells.saturating_sub(1)) as f64 / 2.0;
        Self::new(cx - half, cx + half, cy - half, cy + half, step)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.step]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.step <= 0.0 || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::InvalidConfig(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    fn count(span: f64, step: f64) -> usize {
        (span / step + 1e-9).floor() as usize + 1
    }

    pub fn nx(&self) -> usize {
        Self::count(self.x_max - self.x_min, self.step)
    }

    pub fn ny(&self) -> usize {
        Self::count(self.y_max - self.y_min, self.step)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.step
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.step
    }

    pub fn xs(&self) -> Array1<f64> {
        (0..self.nx()).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Array1<f64> {
        (0..self.ny()).map(|i| self.y(i)).collect()
    }

    /// Nearest node to `(x, y)`, if the point lies within half a step of the grid.
    pub fn nearest_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.x_min) / self.step).round();
        let fy = ((y - self.y_min) / self.step).round();
        if fx < 0.0 || fy < 0.0 || fx as usize >= self.nx() || fy as usize >= self.ny() {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Rejects grids with a node on top of an antenna.
    pub fn check_clear_of(&self, geometry: &ArrayGeometry) -> Result<()> {
        for (antenna, &(ax, ay)) in geometry.positions().iter().enumerate() {
            if let Some((ix, iy)) = self.nearest_cell(ax, ay) {
                let (x, y) = (self.x(ix), self.y(iy));
                if (x - ax).hypot(y - ay) <= COINCIDENCE_TOLERANCE {
                    return Err(Error::CoincidentLocation { antenna, x, y });
                }
            }
        }
        Ok(())
    }

    /// Smallest and largest distance from `(ax, ay)` to any point of the grid rectangle.
    fn distance_range(&self, ax: f64, ay: f64) -> (f64, f64) {
        let cx = ax.clamp(self.x_min, self.x(self.nx() - 1));
        let cy = ay.clamp(self.y_min, self.y(self.ny() - 1));
        let near = (cx - ax).hypot(cy - ay);
        let far = [self.x_min, self.x(self.nx() - 1)]
            .iter()
            .flat_map(|&x| [self.y_min, self.y(self.ny() - 1)].map(|y| (x - ax).hypot(y - ay)))
            .fold(0.0, f64::max);
        (near, far)
    }
}

/// Ambiguity power over a grid together with its peak and PMSR.
#[derive(Debug, Clone, PartialEq)]
pub struct SafMap {
    pub grid: SpatialGrid,
    /// Linear power, `Nx × Ny`.
    pub power: Array2<f64>,
    pub peak_cell: (usize, usize),
    pub peak_power: f64,
    /// Sub-grid refined peak position.
    pub peak_location: (f64, f64),
    pub mainlobe_radius: f64,
    /// `None` when fewer than two cells lie outside the mainlobe.
    pub pmsr_db: Option<f64>,
}

impl SafMap {
    pub fn from_power(grid: SpatialGrid, power: Array2<f64>, mainlobe_radius: f64) -> Result<Self> {
        if power.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if power.dim() != (grid.nx(), grid.ny()) {
            return Err(Error::shape(&[grid.nx(), grid.ny()], &[power.nrows(), power.ncols()]));
        }
        let (peak_cell, peak_power) = argmax(&power);
        let mut map = SafMap {
            grid,
            power,
            peak_cell,
            peak_power,
            peak_location: (grid.x(peak_cell.0), grid.y(peak_cell.1)),
            mainlobe_radius,
            pmsr_db: None,
        };
        map.peak_location = refine_peak(&map);
        map.pmsr_db = pmsr(&map, mainlobe_radius).ok();
        Ok(map)
    }

    /// Recomputes the PMSR with a different mainlobe radius.
    pub fn with_mainlobe_radius(mut self, radius: f64) -> Self {
        self.mainlobe_radius = radius;
        self.pmsr_db = pmsr(&self, radius).ok();
        self
    }

    pub fn peak_cell_location(&self) -> (f64, f64) {
        (self.grid.x(self.peak_cell.0), self.grid.y(self.peak_cell.1))
    }
}

/// Largest value; ties resolve to the smallest `(ix, iy)`.
fn argmax(power: &Array2<f64>) -> ((usize, usize), f64) {
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for (idx, &v) in power.indexed_iter() {
        if v > best.1 {
            best = (idx, v);
        }
    }
    best
}

/// Peak-to-median-sidelobe ratio in dB.
///
/// The mainlobe is every node within `mainlobe_radius` of the peak node. For
/// an even number of sidelobe cells the lower of the two middle values is
/// used.
pub fn pmsr(map: &SafMap, mainlobe_radius: f64) -> Result<f64> {
    let (px, py) = map.peak_cell_location();
    let grid = &map.grid;
    let mut side: Vec<f64> = map
        .power
        .indexed_iter()
        .filter(|((ix, iy), _)| (grid.x(*ix) - px).hypot(grid.y(*iy) - py) > mainlobe_radius)
        .map(|(_, &v)| v)
        .collect();
    if side.len() < 2 {
        return Err(Error::EmptySidelobeRegion);
    }
    let median = lower_median(&mut side).expect("non-empty");
    Ok(10.0 * (map.peak_power / median).log10())
}

/// Three-point log-power parabola through the peak along each axis.
///
/// The offset per axis is clamped to half a step. A peak on the grid
/// boundary, or with a non-positive neighbour, returns the peak node itself.
pub fn refine_peak(map: &SafMap) -> (f64, f64) {
    let (ix, iy) = map.peak_cell;
    let grid = &map.grid;
    let raw = (grid.x(ix), grid.y(iy));
    if ix == 0 || iy == 0 || ix + 1 >= grid.nx() || iy + 1 >= grid.ny() {
        return raw;
    }
    let p = &map.power;
    let offset = |lo: f64, mid: f64, hi: f64| -> Option<f64> {
        if !(lo > 0.0 && mid > 0.0 && hi > 0.0) {
            return None;
        }
        let (lo, mid, hi) = (lo.ln(), mid.ln(), hi.ln());
        let denom = lo - 2.0 * mid + hi;
        if !(denom < 0.0) {
            return Some(0.0);
        }
        Some((0.5 * (lo - hi) / denom).clamp(-0.5, 0.5) * grid.step)
    };
    let dx = offset(p[[ix - 1, iy]], p[[ix, iy]], p[[ix + 1, iy]]);
    let dy = offset(p[[ix, iy - 1]], p[[ix, iy]], p[[ix, iy + 1]]);
    match (dx, dy) {
        (Some(dx), Some(dy)) => (raw.0 + dx, raw.1 + dy),
        _ => raw,
    }
}

/// Profiles through the peak node, in dB relative to the peak.
#[derive(Debug, Clone, PartialEq)]
pub struct SafCuts {
    pub x: Array1<f64>,
    pub x_cut_db: Array1<f64>,
    pub y: Array1<f64>,
    pub y_cut_db: Array1<f64>,
}

pub fn cuts(map: &SafMap) -> SafCuts {
    let (ix, iy) = map.peak_cell;
    let to_db = |v: &f64| {
        if map.peak_power > 0.0 {
            (10.0 * (v / map.peak_power).log10()).max(CUT_FLOOR_DB)
        } else {
            0.0
        }
    };
    SafCuts {
        x: map.grid.xs(),
        x_cut_db: map.power.index_axis(Axis(1), iy).map(to_db),
        y: map.grid.ys(),
        y_cut_db: map.power.index_axis(Axis(0), ix).map(to_db),
    }
}

#[inline]
fn cis(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, s)
}

/// Per-antenna response as a function of hypothesised distance.
trait AntennaKernel: Sync {
    fn eval(&self, d: f64) -> Complex64;
}

/// `Σ_k s_k·exp(+j2π f_k d / c)` by Horner's rule in `exp(j2πΔf d / c)`.
struct ExactKernel {
    coeffs: Vec<Complex64>,
    carrier: f64,
    spacing: f64,
}

impl ExactKernel {
    fn new(row: impl IntoIterator<Item = Complex64>, config: &SystemConfig) -> Self {
        ExactKernel {
            coeffs: row.into_iter().collect(),
            carrier: 2.0 * PI * config.carrier_frequency / SPEED_OF_LIGHT,
            spacing: 2.0 * PI * config.subcarrier_spacing / SPEED_OF_LIGHT,
        }
    }

    /// Subcarrier polynomial without the carrier factor.
    fn baseband(&self, d: f64) -> Complex64 {
        let z = cis(self.spacing * d);
        let acc = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &s| acc * z + s);
        acc * z
    }
}

impl AntennaKernel for ExactKernel {
    fn eval(&self, d: f64) -> Complex64 {
        cis(self.carrier * d) * self.baseband(d)
    }
}

/// Chebyshev interpolant of the subcarrier polynomial over `[lo, hi]`.
struct ChebyshevKernel {
    mid: f64,
    inv_half: f64,
    /// `c_0` already halved.
    coeffs: Vec<Complex64>,
    carrier: f64,
}

const CHEBYSHEV_TOLERANCE: f64 = 1e-14;
const CHEBYSHEV_MAX_NODES: usize = 256;

impl ChebyshevKernel {
    /// Fits with 16, 32, … nodes until the trailing coefficients fall below
    /// `CHEBYSHEV_TOLERANCE·Σ|s_k|`; `None` if the cap is reached first.
    fn fit(exact: &ExactKernel, lo: f64, hi: f64) -> Option<Self> {
        let scale: f64 = exact.coeffs.iter().map(|c| c.norm()).sum();
        if scale == 0.0 {
            return Some(ChebyshevKernel {
                mid: 0.0,
                inv_half: 0.0,
                coeffs: vec![Complex64::new(0.0, 0.0)],
                carrier: exact.carrier,
            });
        }
        let mid = 0.5 * (lo + hi);
        let half = (0.5 * (hi - lo)).max(1e-12);
        let mut m = 16;
        while m <= CHEBYSHEV_MAX_NODES {
            let theta: Vec<f64> = (0..m).map(|j| PI * (j as f64 + 0.5) / m as f64).collect();
            let values: Vec<Complex64> = theta.iter().map(|t| exact.baseband(mid + half * t.cos())).collect();
            let mut coeffs: Vec<Complex64> = (0..m)
                .map(|i| {
                    let sum: Complex64 = values
                        .iter()
                        .zip(&theta)
                        .map(|(v, t)| v * (i as f64 * t).cos())
                        .sum();
                    sum * (2.0 / m as f64)
                })
                .collect();
            coeffs[0] *= 0.5;
            let tail = coeffs[m - 3..].iter().map(|c| c.norm()).fold(0.0, f64::max);
            if tail < CHEBYSHEV_TOLERANCE * scale {
                let keep = coeffs.iter().rposition(|c| c.norm() >= 0.1 * CHEBYSHEV_TOLERANCE * scale).unwrap_or(0);
                coeffs.truncate(keep + 1);
                return Some(ChebyshevKernel {
                    mid,
                    inv_half: 1.0 / half,
                    coeffs,
                    carrier: exact.carrier,
                });
            }
            m *= 2;
        }
        None
    }
}

impl AntennaKernel for ChebyshevKernel {
    fn eval(&self, d: f64) -> Complex64 {
        let t = (d - self.mid) * self.inv_half;
        let two_t = 2.0 * t;
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for c in self.coeffs[1..].iter().rev() {
            let b0 = c + b1 * two_t - b2;
            b2 = b1;
            b1 = b0;
        }
        let base = self.coeffs[0] + b1 * t - b2;
        cis(self.carrier * d) * base
    }
}

enum GeneralKernel {
    Chebyshev(ChebyshevKernel),
    Exact(ExactKernel),
}

impl AntennaKernel for GeneralKernel {
    #[inline]
    fn eval(&self, d: f64) -> Complex64 {
        match self {
            GeneralKernel::Chebyshev(k) => k.eval(d),
            GeneralKernel::Exact(k) => k.eval(d),
        }
    }
}

/// Closed-form response for `s_k = g·exp(-j2π f_k d_ref / c)`.
struct DirichletKernel {
    gain: Complex64,
    reference: f64,
    num_subcarriers: usize,
    /// `2π(f_c + Δf(K+1)/2)/c`.
    centre: f64,
    spacing: f64,
}

impl AntennaKernel for DirichletKernel {
    fn eval(&self, d: f64) -> Complex64 {
        let delta = d - self.reference;
        let theta = self.spacing * delta;
        let k = self.num_subcarriers as f64;
        let half = (0.5 * theta).sin();
        let magnitude = if half.abs() < 1e-10 {
            // Near-aligned phasors: sum the real-valued kernel directly.
            let shift = 0.5 * (k + 1.0);
            (1..=self.num_subcarriers).map(|i| ((i as f64 - shift) * theta).cos()).sum()
        } else {
            (0.5 * k * theta).sin() / half
        };
        self.gain * cis(self.centre * delta) * magnitude
    }
}

/// `Σ_{k=1}^{K} exp(jθk)` in closed form.
pub fn dirichlet_sum(theta: f64, num_subcarriers: usize) -> Complex64 {
    let k = num_subcarriers as f64;
    let half = (0.5 * theta).sin();
    let phase = cis(0.5 * theta * (k + 1.0));
    if half.abs() < 1e-10 {
        let shift = 0.5 * (k + 1.0);
        let real: f64 = (1..=num_subcarriers).map(|i| ((i as f64 - shift) * theta).cos()).sum();
        return phase * real;
    }
    phase * ((0.5 * k * theta).sin() / half)
}

fn evaluate<K: AntennaKernel>(grid: &SpatialGrid, geometry: &ArrayGeometry, kernels: &[K]) -> Array2<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let positions = geometry.positions();
    let rows: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|ix| {
            let x = grid.x(ix);
            (0..ny)
                .map(|iy| {
                    let y = grid.y(iy);
                    let acc: Complex64 = positions
                        .iter()
                        .zip(kernels)
                        .map(|(&(ax, ay), kernel)| {
                            let (dx, dy) = (x - ax, y - ay);
                            kernel.eval((dx * dx + dy * dy).sqrt())
                        })
                        .sum();
                    acc.norm_sqr()
                })
                .collect()
        })
        .collect();
    Array2::from_shape_vec((nx, ny), rows.into_iter().flatten().collect()).expect("row lengths match grid")
}

fn check_snapshot(snapshot: &Array2<Complex64>, config: &SystemConfig, geometry: &ArrayGeometry) -> Result<()> {
    config.validate()?;
    check_geometry(config, geometry)?;
    let expected = (config.num_antennas, config.num_subcarriers);
    if snapshot.dim() != expected {
        return Err(Error::shape(&[expected.0, expected.1], &[snapshot.nrows(), snapshot.ncols()]));
    }
    Ok(())
}

fn prepare(grid: &SpatialGrid, geometry: &ArrayGeometry) -> Result<()> {
    grid.validate()?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    grid.check_clear_of(geometry)
}

/// Matched-filter SAF of an `N×K` snapshot.
///
/// Uses a Chebyshev interpolant of each antenna's subcarrier sum, falling
/// back to exact summation for any antenna where the fit does not converge.
pub fn saf_from_csi(
    snapshot: &Array2<Complex64>,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    grid: &SpatialGrid,
) -> Result<SafMap> {
    check_snapshot(snapshot, config, geometry)?;
    prepare(grid, geometry)?;
    let kernels: Vec<GeneralKernel> = snapshot
        .outer_iter()
        .zip(geometry.positions())
        .map(|(row, &(ax, ay))| {
            let exact = ExactKernel::new(row.iter().copied(), config);
            let (lo, hi) = grid.distance_range(ax, ay);
            match ChebyshevKernel::fit(&exact, lo, hi) {
                Some(cheb) => GeneralKernel::Chebyshev(cheb),
                None => GeneralKernel::Exact(exact),
            }
        })
        .collect();
    SafMap::from_power(*grid, evaluate(grid, geometry, &kernels), DEFAULT_MAINLOBE_RADIUS)
}

/// Same as [`saf_from_csi`] with exact per-cell summation over subcarriers.
pub fn saf_from_csi_exact(
    snapshot: &Array2<Complex64>,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    grid: &SpatialGrid,
) -> Result<SafMap> {
    check_snapshot(snapshot, config, geometry)?;
    prepare(grid, geometry)?;
    let kernels: Vec<ExactKernel> = snapshot
        .outer_iter()
        .map(|row| ExactKernel::new(row.iter().copied(), config))
        .collect();
    SafMap::from_power(*grid, evaluate(grid, geometry, &kernels), DEFAULT_MAINLOBE_RADIUS)
}

/// Complex matched-filter output at a single point.
pub fn matched_filter_at(
    snapshot: &Array2<Complex64>,
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    x: f64,
    y: f64,
) -> Result<Complex64> {
    check_snapshot(snapshot, config, geometry)?;
    Ok(snapshot
        .outer_iter()
        .zip(geometry.positions())
        .map(|(row, &(ax, ay))| ExactKernel::new(row.iter().copied(), config).eval((x - ax).hypot(y - ay)))
        .sum())
}

/// Noiseless snapshot for a UE at `true_loc`, with offsets multiplied in.
pub fn model_snapshot(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    offsets: Option<&OffsetRealization>,
) -> Result<Array2<Complex64>> {
    let mut snapshot = ideal_response(config, geometry, true_loc)?;
    if let Some(off) = offsets {
        if off.phi_f.dim() != snapshot.dim() || off.phi_a.len() != snapshot.nrows() {
            return Err(Error::shape(
                &[snapshot.nrows(), snapshot.ncols()],
                &[off.phi_f.nrows(), off.phi_f.ncols()],
            ));
        }
        for ((n, k), v) in snapshot.indexed_iter_mut() {
            *v *= cis(off.total(n, k));
        }
    }
    Ok(snapshot)
}

/// SAF of the noiseless model response, optionally with phase offsets.
pub fn saf_model(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    offsets: Option<&OffsetRealization>,
    grid: &SpatialGrid,
) -> Result<SafMap> {
    let snapshot = model_snapshot(config, geometry, true_loc, offsets)?;
    saf_from_csi(&snapshot, config, geometry, grid)
}

/// SAF of the noiseless model with the subcarrier sum in closed form.
///
/// Offsets, if given, must not vary across subcarriers.
pub fn saf_fast_path(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    offsets: Option<&OffsetRealization>,
    grid: &SpatialGrid,
) -> Result<SafMap> {
    config.validate()?;
    check_geometry(config, geometry)?;
    prepare(grid, geometry)?;
    let d = distances(geometry, true_loc)?;
    let per_antenna_phase: Vec<f64> = match offsets {
        None => vec![0.0; config.num_antennas],
        Some(off) => {
            if off.phi_f.dim() != (config.num_antennas, config.num_subcarriers) || off.phi_a.len() != config.num_antennas {
                return Err(Error::shape(
                    &[config.num_antennas, config.num_subcarriers],
                    &[off.phi_f.nrows(), off.phi_f.ncols()],
                ));
            }
            off.phi_f
                .outer_iter()
                .zip(&off.phi_a)
                .map(|(row, &pa)| {
                    if row.iter().any(|&v| v != row[0]) {
                        return Err(Error::Precondition(
                            "closed-form SAF needs offsets that are constant across subcarriers".into(),
                        ));
                    }
                    Ok(row[0] + pa)
                })
                .collect::<Result<_>>()?
        }
    };
    let k = config.num_subcarriers as f64;
    let kernels: Vec<DirichletKernel> = (0..config.num_antennas)
        .map(|n| DirichletKernel {
            gain: Complex64::from_polar(config.amplitude_model.amplitude(d[n]), per_antenna_phase[n]),
            reference: d[n],
            num_subcarriers: config.num_subcarriers,
            centre: 2.0 * PI * (config.carrier_frequency + config.subcarrier_spacing * 0.5 * (k + 1.0)) / SPEED_OF_LIGHT,
            spacing: 2.0 * PI * config.subcarrier_spacing / SPEED_OF_LIGHT,
        })
        .collect();
    SafMap::from_power(*grid, evaluate(grid, geometry, &kernels), DEFAULT_MAINLOBE_RADIUS)
}

/// Carrier-only matched filter `|Σ_n v_n·exp(+j2π f_c d_n(x,y)/c)|²`.
pub(crate) fn carrier_image(
    values: &[Complex64],
    carrier_frequency: f64,
    geometry: &ArrayGeometry,
    grid: &SpatialGrid,
) -> Result<Array2<f64>> {
    if values.len() != geometry.len() {
        return Err(Error::shape(&[geometry.len()], &[values.len()]));
    }
    prepare(grid, geometry)?;
    struct Carrier {
        value: Complex64,
        wavenumber: f64,
    }
    impl AntennaKernel for Carrier {
        fn eval(&self, d: f64) -> Complex64 {
            self.value * cis(self.wavenumber * d)
        }
    }
    let kernels: Vec<Carrier> = values
        .iter()
        .map(|&value| Carrier {
            value,
            wavenumber: 2.0 * PI * carrier_frequency / SPEED_OF_LIGHT,
        })
        .collect();
    Ok(evaluate(grid, geometry, &kernels))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmsrSweepRow {
    pub kind: NuisanceKind,
    pub sigma: f64,
    pub seed: u64,
    pub pmsr_db: f64,
}

/// Offset realization of one kind only, indexed by standard deviation.
pub fn offsets_of_kind(
    kind: NuisanceKind,
    sigma: f64,
    seed: u64,
    num_antennas: usize,
    num_subcarriers: usize,
) -> Result<OffsetRealization> {
    let spec = match kind {
        NuisanceKind::Frequency => OffsetSpec::frequency(sigma, seed)?,
        NuisanceKind::Spatial => OffsetSpec::spatial(sigma, seed)?,
    };
    sample_offsets(&spec, num_antennas, num_subcarriers)
}

/// SAF of the model under one offset realization, using the closed form
/// whenever the offsets are constant across subcarriers.
pub fn saf_for_kind(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    kind: NuisanceKind,
    offsets: &OffsetRealization,
    grid: &SpatialGrid,
) -> Result<SafMap> {
    match kind {
        NuisanceKind::Spatial => saf_fast_path(config, geometry, true_loc, Some(offsets), grid),
        NuisanceKind::Frequency => saf_model(config, geometry, true_loc, Some(offsets), grid),
    }
}

/// PMSR for every `(σ, seed)` pair; rows ordered by `σ`, then seed.
///
/// Frequency offsets use the interpolated general path, spatial offsets the
/// closed form.
pub fn pmsr_sweep(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    true_loc: &UeLocation,
    kind: NuisanceKind,
    sigmas: &[f64],
    seeds: &[u64],
    grid: &SpatialGrid,
    mainlobe_radius: f64,
) -> Result<Vec<PmsrSweepRow>> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("sigma list"));
    }
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seed list"));
    }
    let mut rows = Vec::with_capacity(sigmas.len() * seeds.len());
    for &sigma in sigmas {
        // Without offsets every seed yields the same map.
        let shared = if sigma == 0.0 {
            Some(pmsr(&saf_fast_path(config, geometry, true_loc, None, grid)?, mainlobe_radius)?)
        } else {
            None
        };
        for &seed in seeds {
            let pmsr_db = match shared {
                Some(v) => v,
                None => {
                    let off = offsets_of_kind(kind, sigma, seed, config.num_antennas, config.num_subcarriers)?;
                    pmsr(&saf_for_kind(config, geometry, true_loc, kind, &off, grid)?, mainlobe_radius)?
                }
            };
            rows.push(PmsrSweepRow {
                kind,
                sigma,
                seed,
                pmsr_db,
            });
        }
    }
    Ok(rows)
}

/// Lower median of the PMSR per `σ`, in order of first appearance.
pub fn pmsr_medians(rows: &[PmsrSweepRow]) -> Vec<(f64, f64)> {
    let mut sigmas: Vec<f64> = Vec::new();
    for r in rows {
        if !sigmas.contains(&r.sigma) {
            sigmas.push(r.sigma);
        }
    }
    sigmas
        .into_iter()
        .map(|s| {
            let mut values: Vec<f64> = rows.iter().filter(|r| r.sigma == s).map(|r| r.pmsr_db).collect();
            (s, lower_median(&mut values).expect("at least one row per sigma"))
        })
        .collect()
}
