//! Experiment runners. Each one reads an [`ExperimentConfig`], writes its
//! outputs under `out_dir`, and returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use phasecal::calib::{calibrate_from_statistics, CalibrationOptions, CalibrationOutput, SymbolStatistics};
use phasecal::crlb::{crlb_sweep, NuisanceKind};
use phasecal::locate::{locate, LocalizationResult};
use phasecal::model::{offset_statistics, sample_offsets, ArrayGeometry, OffsetSummary, Snr, SystemConfig, Synthesizer, UeLocation};
use phasecal::saf::{cuts, offsets_of_kind, pmsr_medians, pmsr_sweep, saf_fast_path, saf_for_kind, SafMap, SpatialGrid};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::csib::{CsiFileHeader, CsiReader, CsiWriter};
use crate::error::{CliError, Result};
use crate::output::{config_echo, fixed, num, opt, power_db, write_json, CsvTable};
use crate::sidecar::TruthSidecar;

pub const KINDS: [NuisanceKind; 2] = [NuisanceKind::Frequency, NuisanceKind::Spatial];

pub const CAPTURE_FILE: &str = "capture.csib";
pub const TRUTH_FILE: &str = "capture.truth.toml";

fn out_dir(config: &ExperimentConfig) -> Result<&Path> {
    fs::create_dir_all(&config.out_dir)?;
    Ok(&config.out_dir)
}

/// Synthesizes a capture with offsets and noise, streaming it to
/// `capture.csib`, and records the truth in `capture.truth.toml`.
pub fn run_simulate(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(config)?;
    let system = config.system()?;
    let geometry = config.geometry()?;
    let ue = config.ue()?;
    let spec = config.offset_spec()?;
    let offsets = sample_offsets(&spec, system.num_antennas, system.num_subcarriers)?;
    let synth = Synthesizer::new(&system, &geometry, &ue, Some(&offsets), config.seed)?;

    let capture = dir.join(CAPTURE_FILE);
    let header = CsiFileHeader {
        num_antennas: system.num_antennas as u32,
        num_subcarriers: system.num_subcarriers as u32,
        num_symbols: system.num_symbols as u32,
        carrier_frequency: system.carrier_frequency,
        subcarrier_spacing: system.subcarrier_spacing,
        antenna_spacing: system.antenna_spacing,
        positions: None,
    };
    let mut writer = CsiWriter::create(&capture, header)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); system.num_symbols];
    for n in 0..system.num_antennas {
        for k in 0..system.num_subcarriers {
            synth.fill_series(n, k, &mut buf);
            writer.write_series(&buf)?;
        }
    }
    writer.finish()?;

    let truth = dir.join(TRUTH_FILE);
    let sidecar = TruthSidecar::new(&ue, &spec, &offsets);
    fs::write(&truth, format!("{}{}", config_echo("truth", config), sidecar.to_toml()))?;
    Ok(vec![capture, truth])
}

/// Bound sweeps for both offset kinds at `crlb_snr_db`.
pub fn run_crlb_sweep(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(config)?;
    let system = config.system()?.with_snr(Snr::Db(config.crlb_snr_db));
    let ue = config.ue()?;
    let mut table = CsvTable::new("crlb_sweep", &["kind", "num_antennas", "sigma", "rmse_m", "ratio"]);
    for kind in KINDS {
        for row in crlb_sweep(&system, &ue, kind, &config.crlb_sigmas, &config.crlb_antenna_counts)? {
            table.row([
                kind.name().to_string(),
                row.num_antennas.to_string(),
                num(row.sigma),
                num(row.rmse),
                num(row.ratio()),
            ]);
        }
    }
    Ok(vec![table.write(dir, "crlb_sweep.csv", config)?])
}

/// One SAF scenario: a map from a named offset setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SafScenario {
    pub name: &'static str,
    pub kind: Option<NuisanceKind>,
    pub sigma: f64,
    pub map: SafMap,
}

/// Maps for the ideal case and for `saf_sigma` of each offset kind.
pub fn saf_scenarios(config: &ExperimentConfig) -> Result<Vec<SafScenario>> {
    let system = config.system()?;
    let geometry = config.geometry()?;
    let ue = config.ue()?;
    let grid = config.grid()?;
    let radius = config.mainlobe_radius;
    let mut out = vec![SafScenario {
        name: "ideal",
        kind: None,
        sigma: 0.0,
        map: saf_fast_path(&system, &geometry, &ue, None, &grid)?.with_mainlobe_radius(radius),
    }];
    for kind in KINDS {
        let off = offsets_of_kind(kind, config.saf_sigma, config.seed, system.num_antennas, system.num_subcarriers)?;
        out.push(SafScenario {
            name: kind.name(),
            kind: Some(kind),
            sigma: config.saf_sigma,
            map: saf_for_kind(&system, &geometry, &ue, kind, &off, &grid)?.with_mainlobe_radius(radius),
        });
    }
    Ok(out)
}

fn map_table(map: &SafMap) -> CsvTable {
    let mut table = CsvTable::new("saf_map", &["x", "y", "power_db"]);
    for ((ix, iy), &p) in map.power.indexed_iter() {
        table.row([fixed(map.grid.x(ix)), fixed(map.grid.y(iy)), fixed(power_db(p))]);
    }
    table
}

fn cuts_table(map: &SafMap) -> CsvTable {
    let c = cuts(map);
    let mut table = CsvTable::new("saf_cuts", &["axis", "coord", "power_db"]);
    for (x, v) in c.x.iter().zip(&c.x_cut_db) {
        table.row(["x".to_string(), fixed(*x), fixed(*v)]);
    }
    for (y, v) in c.y.iter().zip(&c.y_cut_db) {
        table.row(["y".to_string(), fixed(*y), fixed(*v)]);
    }
    table
}

/// SAF maps, peak cuts and a PMSR report per scenario.
pub fn run_saf(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(config)?;
    let mut files = Vec::new();
    let mut report = CsvTable::new(
        "saf_report",
        &["scenario", "sigma", "seed", "peak_x", "peak_y", "peak_power", "pmsr_db"],
    );
    for s in saf_scenarios(config)? {
        files.push(map_table(&s.map).write(dir, &format!("saf_{}_map.csv", s.name), config)?);
        files.push(cuts_table(&s.map).write(dir, &format!("saf_{}_cuts.csv", s.name), config)?);
        report.row([
            s.name.to_string(),
            num(s.sigma),
            config.seed.to_string(),
            num(s.map.peak_location.0),
            num(s.map.peak_location.1),
            num(s.map.peak_power),
            opt(s.map.pmsr_db),
        ]);
    }
    files.push(report.write(dir, "saf_report.csv", config)?);
    Ok(files)
}

/// Per-seed PMSR over `pmsr_sigmas` for both kinds, with the per-σ median.
pub fn run_pmsr_sweep(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(config)?;
    let system = config.system()?;
    let geometry = config.geometry()?;
    let ue = config.ue()?;
    let grid = config.grid()?;
    let seeds = config.pmsr_seeds();
    let mut table = CsvTable::new("pmsr_sweep", &["kind", "sigma", "seed", "pmsr_db", "median_pmsr_db"]);
    for kind in KINDS {
        let rows = pmsr_sweep(&system, &geometry, &ue, kind, &config.pmsr_sigmas, &seeds, &grid, config.mainlobe_radius)?;
        let medians = pmsr_medians(&rows);
        for r in &rows {
            let median = medians.iter().find(|m| m.0 == r.sigma).expect("median per sigma").1;
            table.row([kind.name().to_string(), num(r.sigma), r.seed.to_string(), num(r.pmsr_db), num(median)]);
        }
    }
    Ok(vec![table.write(dir, "pmsr_sweep.csv", config)?])
}

/// Localization after each calibration stage.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: &'static str,
    pub result: LocalizationResult,
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub calibration: CalibrationOutput,
    /// Uncalibrated, frequency-only, fully calibrated.
    pub stages: [StageReport; 3],
}

/// Calibrates from accumulated symbol sums and localizes at every stage.
pub fn calibrate_and_localize(
    stats: &SymbolStatistics,
    system: &SystemConfig,
    geometry: &ArrayGeometry,
    truth: &UeLocation,
    grid: &SpatialGrid,
    mainlobe_radius: f64,
    range_oversampling: usize,
) -> Result<CalibrationReport> {
    let options = CalibrationOptions {
        range_oversampling,
        compensate_frequency: true,
    };
    let calibration = calibrate_from_statistics(stats, system, geometry, truth, &options)?;
    let stage = |name: &'static str, los: &ndarray::Array1<Complex64>| -> Result<StageReport> {
        Ok(StageReport {
            stage: name,
            result: locate(los.view(), system, geometry, grid, truth, mainlobe_radius)?,
        })
    };
    let stages = [
        stage("uncalibrated", &calibration.los_uncalibrated)?,
        stage("frequency_only", calibration.los_frequency_only())?,
        stage("calibrated", &calibration.calibrated_los)?,
    ];
    Ok(CalibrationReport { calibration, stages })
}

#[derive(Serialize)]
struct StageJson {
    stage: &'static str,
    estimate_x: f64,
    estimate_y: f64,
    error_m: f64,
    pmsr_db: Option<f64>,
}

#[derive(Serialize)]
struct LocalizationJson {
    truth_x: f64,
    truth_y: f64,
    num_symbols: usize,
    stages: Vec<StageJson>,
}

/// Streams a capture, calibrates it against the sidecar truth and writes the
/// tables, the three stage images and a JSON summary.
pub fn run_calibrate_localize(config: &ExperimentConfig, csi: &Path, truth: &Path) -> Result<Vec<PathBuf>> {
    let sidecar = TruthSidecar::read(truth)?;
    let ue = sidecar.ue()?;
    let mut reader = CsiReader::open(csi)?;
    let header = reader.header().clone();
    let geometry = header.geometry()?;
    let system = SystemConfig {
        carrier_frequency: header.carrier_frequency,
        subcarrier_spacing: header.subcarrier_spacing,
        num_subcarriers: header.num_subcarriers as usize,
        num_antennas: header.num_antennas as usize,
        antenna_spacing: header.antenna_spacing,
        num_symbols: header.num_symbols as usize,
        ..config.system()?
    };
    let mut stats = SymbolStatistics::new(system.num_antennas, system.num_subcarriers, system.num_symbols);
    let mut buf = vec![Complex64::new(0.0, 0.0); system.num_symbols];
    while let Some((n, k)) = reader.next_series(&mut buf)? {
        stats.add_series(n, k, &buf);
    }

    let dir = out_dir(config)?;
    let grid = config.grid()?;
    let report = calibrate_and_localize(
        &stats,
        &system,
        &geometry,
        &ue,
        &grid,
        config.mainlobe_radius,
        config.range_oversampling,
    )?;
    let tables = &report.calibration.tables;
    let mut files = Vec::new();

    let mut freq = Vec::new();
    tables.write_frequency_csv(&mut freq)?;
    let freq_path = dir.join("calibration_frequency.csv");
    fs::write(&freq_path, format!("{}{}", config_echo("calibration_frequency", config), String::from_utf8(freq).expect("utf-8")))?;
    files.push(freq_path);
    let mut spatial = Vec::new();
    tables.write_spatial_csv(&mut spatial)?;
    let spatial_path = dir.join("calibration_spatial.csv");
    fs::write(&spatial_path, format!("{}{}", config_echo("calibration_spatial", config), String::from_utf8(spatial).expect("utf-8")))?;
    files.push(spatial_path);

    for s in &report.stages {
        files.push(map_table(&s.result.image).write(dir, &format!("image_{}.csv", s.stage), config)?);
    }
    let summary = LocalizationJson {
        truth_x: ue.x,
        truth_y: ue.y,
        num_symbols: system.num_symbols,
        stages: report
            .stages
            .iter()
            .map(|s| StageJson {
                stage: s.stage,
                estimate_x: s.result.estimate.0,
                estimate_y: s.result.estimate.1,
                error_m: s.result.error,
                pmsr_db: s.result.pmsr_db,
            })
            .collect(),
    };
    files.push(write_json(dir, "localization.json", "localization", config, &summary)?);
    Ok(files)
}

#[derive(Serialize)]
struct SummaryJson {
    count: usize,
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
    bin_edges: Vec<f64>,
    counts: Vec<usize>,
}

impl From<OffsetSummary> for SummaryJson {
    fn from(s: OffsetSummary) -> Self {
        SummaryJson {
            count: s.count,
            mean: s.mean,
            std: s.std,
            min: s.min,
            max: s.max,
            bin_edges: s.bin_edges,
            counts: s.counts,
        }
    }
}

pub const INSPECT_BINS: usize = 20;

/// Describes a capture (header and sample statistics) or a truth sidecar
/// (offset distributions) as JSON.
pub fn run_inspect(path: &Path) -> Result<String> {
    let mut magic = [0u8; 4];
    let is_csib = fs::File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut magic))
        .is_ok()
        && magic == crate::csib::MAGIC;
    let value = if is_csib {
        let mut reader = CsiReader::open(path)?;
        let h = reader.header().clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); h.num_symbols as usize];
        let (mut power, mut count) = (0.0, 0u64);
        let mut magnitudes = Vec::new();
        while let Some(_) = reader.next_series(&mut buf)? {
            for v in &buf {
                power += v.norm_sqr();
                count += 1;
            }
            magnitudes.push(buf.iter().sum::<Complex64>().norm() / buf.len() as f64);
        }
        serde_json::json!({
            "format": "csib",
            "version": crate::csib::VERSION,
            "num_antennas": h.num_antennas,
            "num_subcarriers": h.num_subcarriers,
            "num_symbols": h.num_symbols,
            "carrier_frequency": h.carrier_frequency,
            "subcarrier_spacing": h.subcarrier_spacing,
            "geometry_kind": h.geometry_kind(),
            "antenna_spacing": h.antenna_spacing,
            "mean_sample_power": power / count.max(1) as f64,
            "mean_magnitude": SummaryJson::from(offset_statistics(&magnitudes, INSPECT_BINS)?),
        })
    } else {
        let sidecar = TruthSidecar::read(path)?;
        let off = sidecar.offsets()?;
        serde_json::json!({
            "format": "truth",
            "ue_x": sidecar.ue_x,
            "ue_y": sidecar.ue_y,
            "seed": sidecar.seed,
            "phi_f": SummaryJson::from(offset_statistics(off.phi_f.iter(), INSPECT_BINS)?),
            "phi_a": SummaryJson::from(offset_statistics(off.phi_a.iter(), INSPECT_BINS)?),
        })
    };
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
