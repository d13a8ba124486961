//! On-disk IQ trace format.
//!
//! ```text
//! offset size field
//! 0      4    magic "PSRQ"
//! 4      2    version (u16 LE, currently 1)
//! 6      1    spreading factor
//! 7      1    reserved, written as 0
//! 8      8    sample count (u64 LE)
//! 16     8*n  samples, f32 LE re then f32 LE im
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PSRQ";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IqFileHeader {
    pub version: u16,
    pub sf: u8,
    pub reserved: u8,
    pub sample_count: u64,
}

impl IqFileHeader {
    pub fn new(sf: u8, sample_count: usize) -> Self {
        Self {
            version: VERSION,
            sf,
            reserved: 0,
            sample_count: sample_count as u64,
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6] = self.sf;
        b[7] = self.reserved;
        b[8..16].copy_from_slice(&self.sample_count.to_le_bytes());
        b
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `header` then `samples`. The header's `sample_count` is written as
/// given; use [`IqFileHeader::new`] to keep it consistent with `samples`.
pub fn write_iq(path: &Path, header: &IqFileHeader, samples: &[Complex32]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&header.to_bytes()).map_err(io_err(path))?;
    for s in samples {
        w.write_all(&s.re.to_le_bytes()).map_err(io_err(path))?;
        w.write_all(&s.im.to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_iq(path: &Path) -> Result<(IqFileHeader, Vec<Complex32>)> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut bytes = Vec::new();
    BufReader::new(file).read_to_end(&mut bytes).map_err(io_err(path))?;
    decode(path, &bytes)
}

fn decode(path: &Path, bytes: &[u8]) -> Result<(IqFileHeader, Vec<Complex32>)> {
    let mut found = [0u8; 4];
    let n = bytes.len().min(4);
    found[..n].copy_from_slice(&bytes[..n]);
    if found != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            declared: 0,
            available: 0,
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::VersionUnsupported {
            path: path.to_path_buf(),
            version,
        });
    }
    let header = IqFileHeader {
        version,
        sf: bytes[6],
        reserved: bytes[7],
        sample_count: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
    };
    let payload = &bytes[HEADER_LEN..];
    let available = (payload.len() / 8) as u64;
    if !payload.len().is_multiple_of(8) || available != header.sample_count {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            declared: header.sample_count,
            available,
        });
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..8].try_into().unwrap()),
            )
        })
        .collect();
    Ok((header, samples))
}

pub fn to_c32(samples: &[Complex64]) -> Vec<Complex32> {
    samples
        .iter()
        .map(|x| Complex32::new(x.re as f32, x.im as f32))
        .collect()
}

pub fn to_c64(samples: &[Complex32]) -> Vec<Complex64> {
    samples
        .iter()
        .map(|x| Complex64::new(x.re as f64, x.im as f64))
        .collect()
}
