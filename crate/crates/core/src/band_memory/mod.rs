//! Sub-band partitioning and band-aligned reference memories.
//!
//! A [`MemoryBank`] stores, for every band position `j`, the `R` reference
//! sub-vectors `w_{i,j}` together with their LDN local scales
//! `σ_{j,i,K} = Σ_{k=1}^{K} D(w_{i,j}, w_k)` over the K nearest *other*
//! items of the same band. Scales depend only on the bank, so they are
//! computed once at build time and scoring stays `O(R)` per band.

mod bank;
mod file;
mod spec;

pub use bank::{BandMemory, MemoryBank, SCALE_FLOOR};
pub use file::{decode_bank, encode_bank, load_bank, load_bank_checked, save_bank, ProvenanceWarning, MAGIC, VERSION};
pub use spec::{make_band_spec, slice_bands, BandSpec};

#[allow(unused_imports)]
pub(crate) use bank::validate_k_list;
