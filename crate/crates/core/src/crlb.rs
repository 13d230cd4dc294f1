//! Cramér–Rao bounds for position under unknown phase offsets.
//!
//! The offsets enter as nuisance parameters with a Gaussian-style prior
//! precision. Marginalization uses the Schur complement of the (diagonal)
//! nuisance block, so the cost is linear in the number of nuisance parameters.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::model::{check_geometry, distances, ArrayGeometry, OffsetSpec, SystemConfig, UeLocation};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Largest accepted condition number of the effective FIM.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NuisanceKind {
    /// One phase per antenna/subcarrier pair, `P = N·K`.
    Frequency,
    /// One phase per antenna, `P = N`.
    Spatial,
}

impl NuisanceKind {
    pub fn name(self) -> &'static str {
        match self {
            NuisanceKind::Frequency => "frequency",
            NuisanceKind::Spatial => "spatial",
        }
    }
}

/// Prior information on the nuisance phases.
///
/// `precision` is the diagonal prior term; `None` means the phases are known
/// exactly (zero spread), in which case they drop out of the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuisancePrior {
    pub kind: NuisanceKind,
    pub precision: Option<f64>,
}

impl NuisancePrior {
    /// Gaussian frequency offsets with standard deviation `std`: precision `1/σ²`.
    pub fn frequency(std: f64) -> Result<Self> {
        check_spread(std, "frequency offset std")?;
        Ok(NuisancePrior {
            kind: NuisanceKind::Frequency,
            precision: (std > 0.0).then(|| 1.0 / (std * std)),
        })
    }

    /// Uniform spatial offsets on `[-Δ, Δ]`: precision `3/Δ²`.
    ///
    /// Unlike sampling, `Δ` may exceed π here; sweeps indexed by the standard
    /// deviation reach `Δ = √3·π`.
    pub fn spatial_half_width(half_width: f64) -> Result<Self> {
        check_spread(half_width, "spatial half-width")?;
        Ok(NuisancePrior {
            kind: NuisanceKind::Spatial,
            precision: (half_width > 0.0).then(|| 3.0 / (half_width * half_width)),
        })
    }

    /// Spatial offsets parameterized by their standard deviation, `Δ = √3·σ`.
    pub fn spatial_std(std: f64) -> Result<Self> {
        check_spread(std, "spatial offset std")?;
        Self::spatial_half_width(3f64.sqrt() * std)
    }

    /// Prior of the given kind indexed by standard deviation.
    pub fn from_std(kind: NuisanceKind, std: f64) -> Result<Self> {
        match kind {
            NuisanceKind::Frequency => Self::frequency(std),
            NuisanceKind::Spatial => Self::spatial_std(std),
        }
    }

    pub fn from_spec(spec: &OffsetSpec, kind: NuisanceKind) -> Result<Self> {
        match kind {
            NuisanceKind::Frequency => Self::frequency(spec.freq_std),
            NuisanceKind::Spatial => Self::spatial_half_width(spec.spatial_half_width),
        }
    }
}

fn check_spread(value: f64, what: &str) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::InvalidConfig(format!("{what} must be finite and non-negative, got {value}")));
    }
    Ok(())
}

/// Blocks of the joint Fisher information over `(x, y, φ_1..φ_P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks {
    pub j_xy: [[f64; 2]; 2],
    /// Column `p` holds the `(x, y)` coupling with nuisance phase `p`.
    pub j_xy_phi: Vec<[f64; 2]>,
    /// Diagonal of the nuisance block; `+∞` when the phases are known.
    pub j_phi_diag: Vec<f64>,
    pub nuisance_kind: NuisanceKind,
}

impl FimBlocks {
    pub fn num_nuisance(&self) -> usize {
        self.j_phi_diag.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    pub j_eff: [[f64; 2]; 2],
    pub crlb_xy: [[f64; 2]; 2],
    /// `√tr(crlb_xy)`, meters.
    pub rmse: f64,
}

/// Expected received signal `μ_nk = α_n·exp(-j2π f_k d_n / c)` (offsets omitted).
pub fn mean_signal(config: &SystemConfig, geometry: &ArrayGeometry, loc: &UeLocation) -> Result<Array2<Complex64>> {
    crate::model::ideal_response(config, geometry, loc)
}

/// Analytic position gradients `(∂μ/∂x, ∂μ/∂y)`.
///
/// Includes the amplitude-law derivative, which vanishes for unit amplitude.
pub fn mean_gradients(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    loc: &UeLocation,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    config.validate()?;
    check_geometry(config, geometry)?;
    let mu = mean_signal(config, geometry, loc)?;
    let d = distances(geometry, loc)?;
    let freqs = config.subcarrier_frequencies();
    let shape = mu.dim();
    let mut gx = Array2::zeros(shape);
    let mut gy = Array2::zeros(shape);
    for (n, &(xn, yn)) in geometry.positions().iter().enumerate() {
        let ux = (loc.x - xn) / d[n];
        let uy = (loc.y - yn) / d[n];
        // d ln α / d d_n
        let log_amp_slope = config.amplitude_model.log_slope(d[n]);
        for (k, &f) in freqs.iter().enumerate() {
            let factor = Complex64::new(log_amp_slope, -2.0 * PI * f / SPEED_OF_LIGHT) * mu[[n, k]];
            gx[[n, k]] = factor * ux;
            gy[[n, k]] = factor * uy;
        }
    }
    Ok((gx, gy))
}

/// Assembles the Fisher blocks for the configuration and offset spec.
pub fn fim_blocks(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    loc: &UeLocation,
    spec: &OffsetSpec,
    kind: NuisanceKind,
) -> Result<FimBlocks> {
    fim_blocks_with_prior(config, geometry, loc, &NuisancePrior::from_spec(spec, kind)?)
}

pub fn fim_blocks_with_prior(
    config: &SystemConfig,
    geometry: &ArrayGeometry,
    loc: &UeLocation,
    prior: &NuisancePrior,
) -> Result<FimBlocks> {
    let mu = mean_signal(config, geometry, loc)?;
    let (gx, gy) = mean_gradients(config, geometry, loc)?;
    fim_blocks_from_parts(&mu, &gx, &gy, config.noise_variance(), prior)
}

/// Fisher blocks from an arbitrary mean signal and its position gradients.
///
/// The nuisance derivative is `∂μ/∂φ = jμ`.
pub fn fim_blocks_from_parts(
    mu: &Array2<Complex64>,
    gx: &Array2<Complex64>,
    gy: &Array2<Complex64>,
    noise_variance: f64,
    prior: &NuisancePrior,
) -> Result<FimBlocks> {
    if gx.dim() != mu.dim() || gy.dim() != mu.dim() {
        let (n, k) = mu.dim();
        return Err(Error::shape(&[n, k], &[gx.nrows(), gx.ncols()]));
    }
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::InvalidConfig("the bound needs a finite, positive noise variance".into()));
    }
    let scale = 2.0 / noise_variance;
    let (num_n, num_k) = mu.dim();
    let prior_term = prior.precision.unwrap_or(f64::INFINITY);

    let mut j_xy = [[0.0; 2]; 2];
    let (p_count, per_antenna) = match prior.kind {
        NuisanceKind::Frequency => (num_n * num_k, false),
        NuisanceKind::Spatial => (num_n, true),
    };
    let mut j_xy_phi = vec![[0.0; 2]; p_count];
    let mut j_phi_diag = vec![0.0; p_count];

    for n in 0..num_n {
        for k in 0..num_k {
            let g = [gx[[n, k]], gy[[n, k]]];
            for i in 0..2 {
                for j in 0..2 {
                    j_xy[i][j] += scale * (g[i] * g[j].conj()).re;
                }
            }
            let dphi = Complex64::i() * mu[[n, k]];
            let p = if per_antenna { n } else { n * num_k + k };
            for i in 0..2 {
                j_xy_phi[p][i] += scale * (g[i] * dphi.conj()).re;
            }
            j_phi_diag[p] += scale * mu[[n, k]].norm_sqr();
        }
    }
    j_phi_diag.iter_mut().for_each(|v| *v += prior_term);
    Ok(FimBlocks {
        j_xy,
        j_xy_phi,
        j_phi_diag,
        nuisance_kind: prior.kind,
    })
}

/// Marginalizes the nuisance phases: `J_eff = J_xy − J_xy,φ J_φφ⁻¹ J_φ,xy`.
pub fn effective_fim(blocks: &FimBlocks) -> Result<CrlbResult> {
    if blocks.j_xy_phi.len() != blocks.j_phi_diag.len() {
        return Err(Error::shape(&[blocks.j_phi_diag.len()], &[blocks.j_xy_phi.len()]));
    }
    let mut j_eff = blocks.j_xy;
    for (c, &d) in blocks.j_xy_phi.iter().zip(&blocks.j_phi_diag) {
        if d.is_infinite() {
            continue;
        }
        if !(d > 0.0) {
            return Err(Error::Precondition(format!("nuisance information must be positive, got {d}")));
        }
        for i in 0..2 {
            for j in 0..2 {
                j_eff[i][j] -= c[i] * c[j] / d;
            }
        }
    }
    // The correction is symmetric by construction; remove rounding asymmetry.
    let off = 0.5 * (j_eff[0][1] + j_eff[1][0]);
    j_eff[0][1] = off;
    j_eff[1][0] = off;
    crlb_from_information(j_eff)
}

/// Effective information straight from the mean signal and its gradients.
///
/// Same Schur complement as [`effective_fim`], evaluated one nuisance group
/// at a time as `s·Re(h hᴴ) + π t tᵀ` with `h = g − jμ·t` and `t = c/d`.
/// The large position block and the correction are never formed separately,
/// so the result keeps its relative accuracy when most of the information
/// is lost to the nuisance phases.
pub fn effective_fim_from_parts(
    mu: &Array2<Complex64>,
    gx: &Array2<Complex64>,
    gy: &Array2<Complex64>,
    noise_variance: f64,
    prior: &NuisancePrior,
) -> Result<CrlbResult> {
    if gx.dim() != mu.dim() || gy.dim() != mu.dim() {
        let (n, k) = mu.dim();
        return Err(Error::shape(&[n, k], &[gx.nrows(), gx.ncols()]));
    }
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::InvalidConfig("the bound needs a finite, positive noise variance".into()));
    }
    let scale = 2.0 / noise_variance;
    let (num_n, num_k) = mu.dim();
    let groups: Vec<Vec<(usize, usize)>> = match prior.kind {
        NuisanceKind::Frequency => (0..num_n).flat_map(|n| (0..num_k).map(move |k| vec![(n, k)])).collect(),
        NuisanceKind::Spatial => (0..num_n).map(|n| (0..num_k).map(|k| (n, k)).collect()).collect(),
    };
    let mut j_eff = [[0.0; 2]; 2];
    for group in &groups {
        let mut t = [0.0; 2];
        if let Some(precision) = prior.precision {
            let mut c = [0.0; 2];
            let mut d = precision;
            for &(n, k) in group {
                let v = Complex64::i() * mu[[n, k]];
                c[0] += scale * (gx[[n, k]] * v.conj()).re;
                c[1] += scale * (gy[[n, k]] * v.conj()).re;
                d += scale * mu[[n, k]].norm_sqr();
            }
            if !(d > 0.0) {
                return Err(Error::Precondition(format!("nuisance information must be positive, got {d}")));
            }
            t = [c[0] / d, c[1] / d];
            for i in 0..2 {
                for j in 0..2 {
                    j_eff[i][j] += precision * t[i] * t[j];
                }
            }
        }
        for &(n, k) in group {
            let v = Complex64::i() * mu[[n, k]];
            let h = [gx[[n, k]] - v * t[0], gy[[n, k]] - v * t[1]];
            for i in 0..2 {
                for j in 0..2 {
                    j_eff[i][j] += scale * (h[i] * h[j].conj()).re;
                }
            }
        }
    }
    let off = 0.5 * (j_eff[0][1] + j_eff[1][0]);
    j_eff[0][1] = off;
    j_eff[1][0] = off;
    crlb_from_information(j_eff)
}

/// `a·d − b·c` with one rounding error (Kahan's fused form).
fn difference_of_products(a: f64, d: f64, b: f64, c: f64) -> f64 {
    let w = b * c;
    let e = (-b).mul_add(c, w);
    let f = a.mul_add(d, -w);
    f + e
}

/// Inverts a symmetric 2×2 information matrix with a condition-number guard.
pub fn crlb_from_information(j_eff: [[f64; 2]; 2]) -> Result<CrlbResult> {
    let (a, b, d) = (j_eff[0][0], j_eff[0][1], j_eff[1][1]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d).powi(2) + b * b).sqrt();
    let det = difference_of_products(a, d, b, b);
    let hi = mean + radius;
    let lo = det / hi;
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition.is_finite() && condition <= CONDITION_LIMIT) {
        return Err(Error::SingularFim { condition });
    }
    let crlb_xy = [[d / det, -b / det], [-b / det, a / det]];
    Ok(CrlbResult {
        j_eff,
        crlb_xy,
        rmse: (crlb_xy[0][0] + crlb_xy[1][1]).sqrt(),
    })
}

/// Bound with no nuisance parameters.
pub fn ideal_crlb(config: &SystemConfig, geometry: &ArrayGeometry, loc: &UeLocation) -> Result<CrlbResult> {
    let prior = NuisancePrior {
        kind: NuisanceKind::Spatial,
        precision: None,
    };
    let gradients = mean_gradients(config, geometry, loc)?;
    effective_fim_from_parts(
        &mean_signal(config, geometry, loc)?,
        &gradients.0,
        &gradients.1,
        config.noise_variance(),
        &prior,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbSweepRow {
    pub num_antennas: usize,
    /// Offset standard deviation, radians.
    pub sigma: f64,
    pub rmse: f64,
    pub ideal_rmse: f64,
}

impl CrlbSweepRow {
    pub fn ratio(&self) -> f64 {
        self.rmse / self.ideal_rmse
    }
}

/// Bound over a grid of offset spreads and array sizes.
///
/// For each `N` a centered ULA with the template spacing is built. Spatial
/// sweeps are indexed by standard deviation (`Δ = √3·σ`). Rows are ordered
/// by `N`, then by `σ` in the order given.
pub fn crlb_sweep(
    template: &SystemConfig,
    loc: &UeLocation,
    kind: NuisanceKind,
    sigmas: &[f64],
    antenna_counts: &[usize],
) -> Result<Vec<CrlbSweepRow>> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("sigma list"));
    }
    if antenna_counts.is_empty() {
        return Err(Error::EmptyInput("antenna count list"));
    }
    let mut rows = Vec::with_capacity(sigmas.len() * antenna_counts.len());
    for &num_antennas in antenna_counts {
        let config = template.with_antennas(num_antennas);
        config.validate()?;
        let geometry = ArrayGeometry::ula(num_antennas, config.antenna_spacing)?;
        let mu = mean_signal(&config, &geometry, loc)?;
        let (gx, gy) = mean_gradients(&config, &geometry, loc)?;
        let noise = config.noise_variance();
        let ideal = NuisancePrior {
            kind,
            precision: None,
        };
        let ideal_rmse = effective_fim_from_parts(&mu, &gx, &gy, noise, &ideal)?.rmse;
        for &sigma in sigmas {
            let prior = NuisancePrior::from_std(kind, sigma)?;
            let rmse = effective_fim_from_parts(&mu, &gx, &gy, noise, &prior)?.rmse;
            rows.push(CrlbSweepRow {
                num_antennas,
                sigma,
                rmse,
                ideal_rmse,
            });
        }
    }
    Ok(rows)
}

/// `{π/16, 2π/16, …, π}`.
pub fn default_sigma_grid() -> Vec<f64> {
    (1..=16).map(|i| i as f64 * PI / 16.0).collect()
}

pub const DEFAULT_ANTENNA_COUNTS: [usize; 5] = [8, 16, 23, 32, 64];
