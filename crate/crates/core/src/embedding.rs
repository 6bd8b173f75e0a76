//! Band-organized clip vectors from precomputed encoder patch grids.
//!
//! Each frequency patch row is pooled over time into a `D`-dim descriptor and
//! the descriptors are concatenated in ascending frequency order, so band `q`
//! occupies coordinates `[q·D, (q+1)·D)`.

use crate::dataio::EmbeddingGrid;
use crate::error::{Error, Result};
use crate::types::{AxisKind, ClipVector, Pooling};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedClipVector {
    pub vector: ClipVector,
    pub bands: usize,
    pub band_dim: usize,
}

impl BandedClipVector {
    pub fn band(&self, q: usize) -> &[f64] {
        &self.vector.values[q * self.band_dim..(q + 1) * self.band_dim]
    }
}

pub fn pool_patch_grid(grid: &EmbeddingGrid, mode: Pooling) -> Result<BandedClipVector> {
    let (t_p, f_p, d) = (grid.time_patches(), grid.freq_patches(), grid.dim());
    let init = match mode {
        Pooling::Tmean => 0.0,
        Pooling::Tmax => f64::NEG_INFINITY,
        Pooling::Direct => return Err(Error::invalid("patch pooling mode must be tmean or tmax")),
    };
    let mut values = vec![init; f_p * d];
    for t in 0..t_p {
        for q in 0..f_p {
            let out = &mut values[q * d..(q + 1) * d];
            for (o, &v) in out.iter_mut().zip(grid.patch(t, q)) {
                let v = v as f64;
                match mode {
                    Pooling::Tmean => *o += v,
                    _ => *o = o.max(v),
                }
            }
        }
    }
    if mode == Pooling::Tmean {
        values.iter_mut().for_each(|v| *v /= t_p as f64);
    }
    Ok(BandedClipVector {
        vector: ClipVector::new(values, AxisKind::EmbeddingBand, mode)?,
        bands: f_p,
        band_dim: d,
    })
}
