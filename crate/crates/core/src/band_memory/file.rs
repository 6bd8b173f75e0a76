//! Bank file layout:
//!
//! ```text
//! "BEAMBANK" | u32 version | u64 header_len | JSON header
//! payload: per band { R×C f32 rows, then one R-long f64 scale vector per K }
//!          [R×F f32 unsliced references, only when bands do not tile]
//! u32 CRC32 of every preceding byte
//! ```
//!
//! All integers and floats are little-endian.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::bank::{BandMemory, MemoryBank};
use super::spec::BandSpec;
use crate::error::{Error, Result};
use crate::types::Pooling;

pub const MAGIC: &[u8; 8] = b"BEAMBANK";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    spec: BandSpec,
    pooling: Pooling,
    refs: usize,
    k_list: Vec<usize>,
    config_hash: String,
    band_offsets: Vec<u64>,
    full_offset: Option<u64>,
    payload_len: u64,
    floored_scales: usize,
}

fn band_bytes(refs: usize, width: usize, n_k: usize) -> u64 {
    (refs * width * 4 + n_k * refs * 8) as u64
}

pub fn encode_bank(bank: &MemoryBank) -> Vec<u8> {
    let n_k = bank.k_list.len();
    let mut band_offsets = Vec::with_capacity(bank.bands.len());
    let mut off = 0u64;
    for _ in &bank.bands {
        band_offsets.push(off);
        off += band_bytes(bank.refs, bank.spec.window, n_k);
    }
    let full_offset = bank.full.as_ref().map(|_| off);
    if bank.full.is_some() {
        off += (bank.refs * bank.spec.feature_len * 4) as u64;
    }
    let header = Header {
        spec: bank.spec.clone(),
        pooling: bank.pooling,
        refs: bank.refs,
        k_list: bank.k_list.clone(),
        config_hash: bank.config_hash.clone(),
        band_offsets,
        full_offset,
        payload_len: off,
        floored_scales: bank.floored_scales,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::with_capacity(8 + 4 + 8 + header_json.len() + off as usize + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for band in &bank.bands {
        for v in &band.rows {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for scale in &band.scales {
            for v in scale {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    if let Some(full) = &bank.full {
        for v in &full.rows {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_bank(bytes: &[u8]) -> Result<MemoryBank> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::NotABank);
    }
    if bytes.len() < 8 + 4 + 8 + 4 {
        return Err(Error::Truncated);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::BankVersion(version));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body_end = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    if 20 + header_len > body_end {
        return Err(Error::Truncated);
    }
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let header: Header = serde_json::from_slice(&bytes[20..20 + header_len]).map_err(|e| Error::Format {
        what: "bank header",
        msg: e.to_string(),
    })?;
    header.spec.validate()?;
    let payload = &bytes[20 + header_len..body_end];
    if payload.len() as u64 != header.payload_len {
        return Err(Error::Truncated);
    }

    let (r, c, n_k) = (header.refs, header.spec.window, header.k_list.len());
    if header.band_offsets.len() != header.spec.n_bands() {
        return Err(Error::Format {
            what: "bank header",
            msg: "band offset count does not match the band spec".into(),
        });
    }
    let mut bands = Vec::with_capacity(header.band_offsets.len());
    for &start in &header.band_offsets {
        let start = start as usize;
        let end = start + band_bytes(r, c, n_k) as usize;
        let chunk = payload.get(start..end).ok_or(Error::Truncated)?;
        let (row_bytes, scale_bytes) = chunk.split_at(r * c * 4);
        let rows = read_f32(row_bytes);
        let scales = scale_bytes.chunks_exact(r * 8).map(read_f64).collect();
        bands.push(BandMemory::from_parts(rows, c, scales));
    }
    let full = match header.full_offset {
        Some(start) => {
            let start = start as usize;
            let len = r * header.spec.feature_len * 4;
            let chunk = payload.get(start..start + len).ok_or(Error::Truncated)?;
            Some(BandMemory::from_parts(read_f32(chunk), header.spec.feature_len, Vec::new()))
        }
        None => None,
    };
    if full.is_none() != header.spec.tiles_exactly() {
        return Err(Error::Format {
            what: "bank header",
            msg: "unsliced references present iff bands do not tile".into(),
        });
    }
    Ok(MemoryBank {
        spec: header.spec,
        pooling: header.pooling,
        refs: r,
        bands,
        full,
        k_list: header.k_list,
        config_hash: header.config_hash,
        floored_scales: header.floored_scales,
    })
}

fn read_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect()
}

fn read_f64(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect()
}

pub fn save_bank(bank: &MemoryBank, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_bank(bank)).map_err(|e| Error::io(path, e))
}

pub fn load_bank(path: impl AsRef<Path>) -> Result<MemoryBank> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bank(&bytes)
}

/// Bank built under a different frontend configuration than the caller's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceWarning {
    pub bank_hash: String,
    pub expected_hash: String,
}

impl std::fmt::Display for ProvenanceWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "bank frontend hash {} differs from the current configuration {}",
            self.bank_hash, self.expected_hash
        )
    }
}

/// Loads a bank and reports (without failing) a frontend-hash mismatch.
pub fn load_bank_checked(path: impl AsRef<Path>, expected_hash: &str) -> Result<(MemoryBank, Option<ProvenanceWarning>)> {
    let bank = load_bank(path)?;
    let warning = (bank.config_hash != expected_hash).then(|| ProvenanceWarning {
        bank_hash: bank.config_hash.clone(),
        expected_hash: expected_hash.to_string(),
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok((bank, warning))
}
