//! Worker-pool sizing.

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "BEAMKIT_THREADS";

/// Parses a thread cap; empty means no cap.
pub fn parse_threads(raw: &str) -> Result<Option<usize>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Some(n)),
        _ => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))),
    }
}

/// Sizes the global rayon pool from `BEAMKIT_THREADS`. Call once, before any
/// parallel work; returns the cap that was applied.
pub fn init_from_env() -> Result<Option<usize>> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => parse_threads(&v)?,
        Err(_) => None,
    };
    if let Some(n) = cap {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    Ok(cap)
}
