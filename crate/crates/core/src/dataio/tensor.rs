//! Raw little-endian f32 tensors with a JSON sidecar at `<path>.json`.
//!
//! The same container carries precomputed encoder patch grids (`[T_p, F_p, D]`)
//! and cached clip vectors (`[F]`).

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSidecar {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub order: String,
}

impl TensorSidecar {
    pub fn f32_c(shape: Vec<usize>) -> Self {
        TensorSidecar {
            shape,
            dtype: "f32".into(),
            order: "C".into(),
        }
    }

    pub fn elements(&self) -> usize {
        self.shape.iter().product()
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads a tensor and its sidecar, returning the shape and the values.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<f32>)> {
    let path = path.as_ref();
    let side_path = sidecar_path(path);
    let side_bytes = std::fs::read(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: TensorSidecar = serde_json::from_slice(&side_bytes).map_err(|e| Error::Format {
        what: "tensor sidecar",
        msg: e.to_string(),
    })?;
    if side.dtype != "f32" {
        return Err(Error::UnsupportedEncoding(format!("tensor dtype {}", side.dtype)));
    }
    if side.order != "C" {
        return Err(Error::UnsupportedEncoding(format!("tensor order {}", side.order)));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let declared = side.elements();
    if bytes.len() % 4 != 0 || bytes.len() / 4 != declared {
        return Err(Error::ElementCount {
            declared,
            found: bytes.len() / 4,
        });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok((side.shape, values))
}

pub fn write_tensor(path: impl AsRef<Path>, shape: &[usize], values: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let side = TensorSidecar::f32_c(shape.to_vec());
    if side.elements() != values.len() {
        return Err(Error::ElementCount {
            declared: side.elements(),
            found: values.len(),
        });
    }
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let side_path = sidecar_path(path);
    let json = serde_json::to_vec(&side).expect("sidecar serializes");
    std::fs::write(&side_path, json).map_err(|e| Error::io(&side_path, e))
}

/// Encoder patch embeddings reshaped to time-patch × frequency-patch × dim.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrid {
    values: Vec<f32>,
    t_p: usize,
    f_p: usize,
    dim: usize,
}

impl EmbeddingGrid {
    pub fn new(values: Vec<f32>, t_p: usize, f_p: usize, dim: usize) -> Result<Self> {
        if t_p == 0 || f_p == 0 || dim == 0 {
            return Err(Error::invalid("embedding grid dimensions must be >= 1"));
        }
        if values.len() != t_p * f_p * dim {
            return Err(Error::ElementCount {
                declared: t_p * f_p * dim,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(EmbeddingGrid {
            values,
            t_p,
            f_p,
            dim,
        })
    }

    pub fn time_patches(&self) -> usize {
        self.t_p
    }

    pub fn freq_patches(&self) -> usize {
        self.f_p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// The `D`-vector at time patch `t`, frequency patch `q`.
    pub fn patch(&self, t: usize, q: usize) -> &[f32] {
        let start = (t * self.f_p + q) * self.dim;
        &self.values[start..start + self.dim]
    }
}

pub fn load_embedding(path: impl AsRef<Path>) -> Result<EmbeddingGrid> {
    let (shape, values) = read_tensor(path)?;
    match shape.as_slice() {
        &[t, f, d] => EmbeddingGrid::new(values, t, f, d),
        other => Err(Error::Format {
            what: "embedding sidecar",
            msg: format!("expected 3 dimensions, got {other:?}"),
        }),
    }
}

pub fn save_embedding(path: impl AsRef<Path>, grid: &EmbeddingGrid) -> Result<()> {
    write_tensor(path, &[grid.t_p, grid.f_p, grid.dim], &grid.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_raw(path: &Path, shape: &[usize], values: &[f32]) {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(path, bytes).unwrap();
        std::fs::write(
            sidecar_path(path),
            serde_json::to_vec(&TensorSidecar::f32_c(shape.to_vec())).unwrap(),
        )
        .unwrap();
    }

    #[test]
    fn identity_round_trip_small() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.f32");
        write_raw(&p, &[1, 1, 4], &[1.0, 2.0, 3.0, 4.0]);
        let g = load_embedding(&p).unwrap();
        assert_eq!(g.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((g.time_patches(), g.freq_patches(), g.dim()), (1, 1, 4));
    }

    #[test]
    fn element_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.f32");
        write_raw(&p, &[2, 2, 3], &[0.5; 11]);
        let err = load_embedding(&p).unwrap_err();
        assert!(err.to_string().contains("element count mismatch"), "{err}");
    }

    #[test]
    fn beats_sized_grid_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("beats.f32");
        let n = 496 * 8 * 768;
        let vals: Vec<f32> = (0..n).map(|i| (i % 97) as f32 * 0.01).collect();
        write_raw(&p, &[496, 8, 768], &vals);
        let g = load_embedding(&p).unwrap();
        assert_eq!(g.freq_patches() * g.dim(), 6144);
    }

    #[test]
    fn rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nan.f32");
        write_raw(&p, &[1, 1, 2], &[1.0, f32::NAN]);
        assert!(matches!(load_embedding(&p), Err(Error::NonFinite(1))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn save_load_bit_identical(t in 1usize..4, f in 1usize..4, d in 1usize..5, seed in any::<u32>()) {
            let n = t * f * d;
            let vals: Vec<f32> = (0..n).map(|i| f32::from_bits((seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 7919)) & 0x3fff_ffff)).collect();
            let grid = EmbeddingGrid::new(vals.clone(), t, f, d).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("x.f32");
            save_embedding(&p, &grid).unwrap();
            let back = load_embedding(&p).unwrap();
            prop_assert_eq!(back.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            vals.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}
