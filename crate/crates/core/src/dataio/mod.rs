//! On-disk formats: manifests, WAV audio, f32 tensors and run configuration.

mod config;
mod manifest;
mod tensor;
mod wav;

pub use config::{Aggregation, DmmAgg, DomainAucMode, Frontend, PoolingMode, RunConfig};
pub use manifest::{load_manifest, read_manifest, save_manifest, write_manifest, ClipRecord};
pub use tensor::{
    load_embedding, read_tensor, save_embedding, sidecar_path, write_tensor, EmbeddingGrid, TensorSidecar,
};
pub use wav::{load_waveform, prepare, read_wav_mono, write_wav_f32, write_wav_i16, Waveform};
