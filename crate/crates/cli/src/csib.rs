//! `CSIB` binary container for CSI captures.
//!
//! Little-endian throughout. Header:
//!
//! | field                | type          |
//! |----------------------|---------------|
//! | magic `"CSIB"`       | 4 bytes       |
//! | version (= 1)        | u32           |
//! | N, K, L              | u32 each      |
//! | carrier frequency    | f64 (Hz)      |
//! | subcarrier spacing   | f64 (Hz)      |
//! | geometry kind        | u8            |
//! | antenna spacing      | f64 (m)       |
//! | positions (kind 1)   | N × (f64, f64)|
//!
//! Geometry kind 0 is a centred ULA with the given spacing; kind 1 lists
//! explicit `(x, y)` positions and the spacing field is informational. The
//! payload is `N·K·L` samples of interleaved `f32` (re, im), ordered
//! antenna-major, then subcarrier, then symbol.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;
use phasecal::model::{ArrayGeometry, CsiTensor, Layout};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"CSIB";
pub const VERSION: u32 = 1;
const SAMPLE_BYTES: u64 = 8;

#[derive(Debug, Error)]
pub enum CsibError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("unknown geometry kind {0}")]
    GeometryKind(u8),
    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: u64 },
    #[error("dimensions {0}x{1}x{2} overflow the payload size")]
    Overflow(u32, u32, u32),
    #[error("invalid header: {0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiFileHeader {
    pub num_antennas: u32,
    pub num_subcarriers: u32,
    pub num_symbols: u32,
    pub carrier_frequency: f64,
    pub subcarrier_spacing: f64,
    pub antenna_spacing: f64,
    /// `Some` for geometry kind 1.
    pub positions: Option<Vec<(f64, f64)>>,
}

impl CsiFileHeader {
    pub fn for_tensor(csi: &CsiTensor, geometry: &ArrayGeometry) -> Self {
        let (n, k, l) = csi.dims();
        let (antenna_spacing, positions) = match geometry.layout() {
            Layout::Ula { spacing } => (spacing, None),
            Layout::Explicit => (0.0, Some(geometry.positions().to_vec())),
        };
        CsiFileHeader {
            num_antennas: n as u32,
            num_subcarriers: k as u32,
            num_symbols: l as u32,
            carrier_frequency: csi.carrier_frequency(),
            subcarrier_spacing: csi.subcarrier_spacing(),
            antenna_spacing,
            positions,
        }
    }

    pub fn geometry_kind(&self) -> u8 {
        u8::from(self.positions.is_some())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry, phasecal::Error> {
        match &self.positions {
            None => ArrayGeometry::ula(self.num_antennas as usize, self.antenna_spacing),
            Some(p) => ArrayGeometry::from_positions(p.clone()),
        }
    }

    pub fn header_len(&self) -> u64 {
        let base = 4 + 4 + 12 + 16 + 1 + 8;
        base + self.positions.as_ref().map_or(0, |p| 16 * p.len() as u64)
    }

    /// Payload size in bytes.
    pub fn payload_len(&self) -> Result<u64, CsibError> {
        let overflow = || CsibError::Overflow(self.num_antennas, self.num_subcarriers, self.num_symbols);
        (self.num_antennas as u64)
            .checked_mul(self.num_subcarriers as u64)
            .and_then(|v| v.checked_mul(self.num_symbols as u64))
            .and_then(|v| v.checked_mul(SAMPLE_BYTES))
            .filter(|&v| usize::try_from(v).is_ok())
            .ok_or_else(overflow)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<(), CsibError> {
        out.write_all(&MAGIC)?;
        for v in [VERSION, self.num_antennas, self.num_subcarriers, self.num_symbols] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&self.carrier_frequency.to_le_bytes())?;
        out.write_all(&self.subcarrier_spacing.to_le_bytes())?;
        out.write_all(&[self.geometry_kind()])?;
        out.write_all(&self.antenna_spacing.to_le_bytes())?;
        if let Some(p) = &self.positions {
            for (x, y) in p {
                out.write_all(&x.to_le_bytes())?;
                out.write_all(&y.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self, CsibError> {
        let mut magic = [0; 4];
        read_exact(input, &mut magic)?;
        if magic != MAGIC {
            return Err(CsibError::BadMagic(magic));
        }
        let version = read_u32(input)?;
        if version != VERSION {
            return Err(CsibError::Version(version));
        }
        let num_antennas = read_u32(input)?;
        let num_subcarriers = read_u32(input)?;
        let num_symbols = read_u32(input)?;
        let carrier_frequency = read_f64(input)?;
        let subcarrier_spacing = read_f64(input)?;
        let mut kind = [0u8];
        read_exact(input, &mut kind)?;
        let antenna_spacing = read_f64(input)?;
        let positions = match kind[0] {
            0 => None,
            1 => Some(
                (0..num_antennas)
                    .map(|_| Ok((read_f64(input)?, read_f64(input)?)))
                    .collect::<Result<Vec<_>, CsibError>>()?,
            ),
            other => return Err(CsibError::GeometryKind(other)),
        };
        let header = CsiFileHeader {
            num_antennas,
            num_subcarriers,
            num_symbols,
            carrier_frequency,
            subcarrier_spacing,
            antenna_spacing,
            positions,
        };
        header.payload_len()?;
        Ok(header)
    }
}

/// Header reads hitting end-of-file are reported as truncation.
fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<(), CsibError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => CsibError::Truncated {
            expected: buf.len() as u64,
            found: 0,
        },
        _ => CsibError::Io(e),
    })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, CsibError> {
    let mut b = [0; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64, CsibError> {
    let mut b = [0; 8];
    read_exact(input, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Streams a capture to disk one `(n, k)` series at a time.
pub struct CsiWriter {
    out: BufWriter<File>,
    header: CsiFileHeader,
    written: u64,
}

impl CsiWriter {
    pub fn create(path: &Path, header: CsiFileHeader) -> Result<Self, CsibError> {
        header.payload_len()?;
        let mut out = BufWriter::new(File::create(path)?);
        header.write_to(&mut out)?;
        Ok(CsiWriter {
            out,
            header,
            written: 0,
        })
    }

    /// Appends the next series (must hold exactly `L` samples).
    pub fn write_series(&mut self, samples: &[Complex64]) -> Result<(), CsibError> {
        if samples.len() != self.header.num_symbols as usize {
            return Err(CsibError::Header(format!(
                "series of {} samples, header says {}",
                samples.len(),
                self.header.num_symbols
            )));
        }
        let mut buf = Vec::with_capacity(samples.len() * 8);
        for v in samples {
            buf.extend_from_slice(&(v.re as f32).to_le_bytes());
            buf.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        self.out.write_all(&buf)?;
        self.written += samples.len() as u64 * SAMPLE_BYTES;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CsibError> {
        let expected = self.header.payload_len()?;
        if self.written != expected {
            return Err(CsibError::LengthMismatch {
                expected,
                found: self.written,
            });
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a capture one `(n, k)` series at a time.
pub struct CsiReader {
    input: BufReader<File>,
    header: CsiFileHeader,
    next: u64,
    raw: Vec<u8>,
}

impl CsiReader {
    /// Opens the file and checks its total length against the header.
    pub fn open(path: &Path) -> Result<Self, CsibError> {
        let file = File::open(path)?;
        let size = file.metadata()?.len();
        let mut input = BufReader::new(file);
        let header = CsiFileHeader::read_from(&mut input)?;
        let expected = header.header_len() + header.payload_len()?;
        if size < expected {
            return Err(CsibError::Truncated { expected, found: size });
        }
        if size > expected {
            return Err(CsibError::LengthMismatch { expected, found: size });
        }
        Ok(CsiReader {
            input,
            raw: vec![0; header.num_symbols as usize * SAMPLE_BYTES as usize],
            header,
            next: 0,
        })
    }

    pub fn header(&self) -> &CsiFileHeader {
        &self.header
    }

    /// Fills `out` with the next series and returns its `(n, k)`, or `None`
    /// once every series has been read.
    pub fn next_series(&mut self, out: &mut [Complex64]) -> Result<Option<(usize, usize)>, CsibError> {
        let k_count = self.header.num_subcarriers as u64;
        if self.next == self.header.num_antennas as u64 * k_count {
            return Ok(None);
        }
        if out.len() != self.header.num_symbols as usize {
            return Err(CsibError::Header(format!("buffer of {} samples", out.len())));
        }
        self.input.read_exact(&mut self.raw).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => CsibError::Truncated {
                expected: self.raw.len() as u64,
                found: 0,
            },
            _ => CsibError::Io(e),
        })?;
        for (v, chunk) in out.iter_mut().zip(self.raw.chunks_exact(8)) {
            let re = f32::from_le_bytes(chunk[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(chunk[4..].try_into().expect("4 bytes"));
            *v = Complex64::new(re as f64, im as f64);
        }
        let idx = self.next;
        self.next += 1;
        Ok(Some(((idx / k_count) as usize, (idx % k_count) as usize)))
    }
}

pub fn write_csi(path: &Path, csi: &CsiTensor, geometry: &ArrayGeometry) -> Result<(), CsibError> {
    let mut writer = CsiWriter::create(path, CsiFileHeader::for_tensor(csi, geometry))?;
    let (n, k, _) = csi.dims();
    for a in 0..n {
        for b in 0..k {
            let series: Vec<Complex64> = csi.series(a, b).to_vec();
            writer.write_series(&series)?;
        }
    }
    writer.finish()
}

/// Reads a whole capture. Nothing is returned unless the file is complete.
pub fn read_csi(path: &Path) -> Result<(CsiFileHeader, CsiTensor), CsibError> {
    let mut reader = CsiReader::open(path)?;
    let h = reader.header().clone();
    let (n, k, l) = (h.num_antennas as usize, h.num_subcarriers as usize, h.num_symbols as usize);
    let mut data = Array3::zeros((n, k, l));
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    while let Some((a, b)) = reader.next_series(&mut buf)? {
        data.slice_mut(ndarray::s![a, b, ..])
            .iter_mut()
            .zip(&buf)
            .for_each(|(d, v)| *d = *v);
    }
    let tensor = CsiTensor::new(data, h.carrier_frequency, h.subcarrier_spacing)
        .map_err(|e| CsibError::Header(e.to_string()))?;
    Ok((h, tensor))
}
