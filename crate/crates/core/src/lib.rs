//! Band-aligned nearest-neighbour anomaly scoring for machine sounds.
//!
//! Clip vectors with an ordered band axis are sliced into sub-bands, each
//! band is matched against its own memory of normal references, and the
//! band distances are averaged. The crate also covers the frontends that
//! produce the vectors, the evaluation metrics and the signal-detection
//! diagnostics that compare sub-band with whole-vector matching.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod band_memory;
pub mod cosine;
pub mod cost;
pub mod dataio;
pub mod dsp;
pub mod embedding;
pub mod error;
pub mod lpc;
pub mod metrics;
pub mod parallel;
pub mod pipeline;
pub mod scoring;
pub mod sdt;
pub mod synth;
pub mod types;

pub use band_memory::{BandSpec, MemoryBank};
pub use dataio::{ClipRecord, RunConfig};
pub use error::{Error, Result};
pub use scoring::ScoreRow;
pub use types::{AxisKind, ClipVector, Domain, Label, Pooling, Split};
