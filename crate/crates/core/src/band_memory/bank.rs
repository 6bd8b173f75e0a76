use rayon::prelude::*;

use super::spec::BandSpec;
use crate::cosine::{cos_from_parts, distance_from_cos, dot_f32_f32, norm_sq_f32};
use crate::error::{Error, Result};
use crate::types::{ClipVector, Pooling};

/// Local scales below this are replaced by it.
pub const SCALE_FLOOR: f64 = 1e-12;

/// Reference sub-vectors of one band position, `R × C` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMemory {
    pub(crate) rows: Vec<f32>,
    pub(crate) width: usize,
    /// Squared norms, derived from `rows`.
    pub(crate) norms: Vec<f64>,
    /// LDN local scales, one vector of length `R` per configured K.
    pub(crate) scales: Vec<Vec<f64>>,
}

impl BandMemory {
    pub(crate) fn from_parts(rows: Vec<f32>, width: usize, scales: Vec<Vec<f64>>) -> Self {
        let norms = rows.chunks_exact(width).map(norm_sq_f32).collect();
        BandMemory {
            rows,
            width,
            norms,
            scales,
        }
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.width..(i + 1) * self.width]
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms[i]
    }
}

/// Band-aligned reference memory. The reference vectors are stored as f32 and
/// promoted to f64 for every distance computation; local scales are stored
/// as f64. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    pub(crate) spec: BandSpec,
    pub(crate) pooling: Pooling,
    pub(crate) refs: usize,
    pub(crate) bands: Vec<BandMemory>,
    /// Unsliced references, kept when the bands do not tile the axis.
    pub(crate) full: Option<BandMemory>,
    pub(crate) k_list: Vec<usize>,
    pub(crate) config_hash: String,
    pub(crate) floored_scales: usize,
}

impl MemoryBank {
    pub fn build(refs: &[ClipVector], spec: BandSpec, k_list: &[usize], config_hash: impl Into<String>) -> Result<Self> {
        let first = refs.first().ok_or(Error::Empty("reference set"))?;
        let pooling = first.pooling;
        for r in refs {
            if r.len() != spec.feature_len {
                return Err(Error::LengthMismatch {
                    expected: spec.feature_len,
                    found: r.len(),
                });
            }
            if r.pooling != pooling {
                return Err(Error::invalid("references mix pooling views"));
            }
        }
        let r = refs.len();
        // K = 0 means unnormalized scoring and needs no scales.
        let mut ks: Vec<usize> = Vec::new();
        for &k in k_list {
            if k > 0 && !ks.contains(&k) {
                ks.push(k);
            }
        }
        let k_list = &ks[..];
        validate_k_list(k_list, r)?;

        let quantized: Vec<Vec<f32>> = refs
            .iter()
            .map(|c| c.values.iter().map(|&v| v as f32).collect())
            .collect();
        if let Some(i) = quantized.iter().flatten().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }

        let mut floored = 0;
        let mut bands = Vec::with_capacity(spec.n_bands());
        for j in 0..spec.n_bands() {
            let range = spec.range(j);
            let mut rows = Vec::with_capacity(r * spec.window);
            for q in &quantized {
                rows.extend_from_slice(&q[range.clone()]);
            }
            let mut band = BandMemory::from_parts(rows, spec.window, Vec::new());
            let (scales, n_floor) = local_scales(&band, k_list);
            band.scales = scales;
            floored += n_floor;
            bands.push(band);
        }
        if floored > 0 {
            log::warn!("{floored} zero local scales (duplicate references) floored at {SCALE_FLOOR:e}");
        }
        let full = (!spec.tiles_exactly()).then(|| BandMemory::from_parts(quantized.concat(), spec.feature_len, Vec::new()));

        Ok(MemoryBank {
            spec,
            pooling,
            refs: r,
            bands,
            full,
            k_list: k_list.to_vec(),
            config_hash: config_hash.into(),
            floored_scales: floored,
        })
    }

    pub fn spec(&self) -> &BandSpec {
        &self.spec
    }

    pub fn pooling(&self) -> Pooling {
        self.pooling
    }

    pub fn len(&self) -> usize {
        self.refs
    }

    pub fn is_empty(&self) -> bool {
        self.refs == 0
    }

    pub fn band(&self, j: usize) -> &BandMemory {
        &self.bands[j]
    }

    pub fn bands(&self) -> &[BandMemory] {
        &self.bands
    }

    pub fn full(&self) -> Option<&BandMemory> {
        self.full.as_ref()
    }

    pub fn k_list(&self) -> &[usize] {
        &self.k_list
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn floored_scales(&self) -> usize {
        self.floored_scales
    }

    /// Local scales `σ_{j,·,K}` for band `j`.
    pub fn scales(&self, j: usize, k: usize) -> Result<&[f64]> {
        let idx = self
            .k_list
            .iter()
            .position(|&x| x == k)
            .ok_or_else(|| Error::invalid(format!("K = {k} was not precomputed (bank has {:?})", self.k_list)))?;
        Ok(&self.bands[j].scales[idx])
    }

    /// Reference `i` as a full-length f64 vector.
    pub fn reference(&self, i: usize) -> Vec<f64> {
        match &self.full {
            Some(full) => full.row(i).iter().map(|&v| v as f64).collect(),
            None => self
                .bands
                .iter()
                .flat_map(|b| b.row(i).iter().map(|&v| v as f64))
                .collect(),
        }
    }
}

pub(crate) fn validate_k_list(k_list: &[usize], refs: usize) -> Result<()> {
    if k_list.is_empty() {
        return Ok(());
    }
    if refs < 2 {
        return Err(Error::invalid("local density normalization needs at least 2 references"));
    }
    if let Some(&k) = k_list.iter().find(|&&k| k == 0 || k > refs - 1) {
        return Err(Error::invalid(format!(
            "K = {k} is outside 1..={} for a bank of {refs} references",
            refs - 1
        )));
    }
    Ok(())
}

/// Sum of the K smallest cosine distances from each item to the other items
/// of the band. Returns the per-K scale vectors and the number floored.
pub(crate) fn local_scales(band: &BandMemory, k_list: &[usize]) -> (Vec<Vec<f64>>, usize) {
    if k_list.is_empty() {
        return (Vec::new(), 0);
    }
    let r = band.len();
    let k_max = *k_list.iter().max().expect("non-empty");
    let per_item: Vec<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|i| {
            let wi = band.row(i);
            let mut d: Vec<f64> = (0..r)
                .filter(|&k| k != i)
                .map(|k| {
                    distance_from_cos(cos_from_parts(dot_f32_f32(wi, band.row(k)), band.norm_sq(i), band.norm_sq(k)))
                })
                .collect();
            d.sort_unstable_by(f64::total_cmp);
            let mut prefix = Vec::with_capacity(k_max);
            let mut acc = 0.0;
            for x in d.iter().take(k_max) {
                acc += x;
                prefix.push(acc);
            }
            prefix
        })
        .collect();
    let mut floored = 0;
    let scales = k_list
        .iter()
        .map(|&k| {
            per_item
                .iter()
                .map(|p| {
                    let s = p[k - 1];
                    if s < SCALE_FLOOR {
                        floored += 1;
                        SCALE_FLOOR
                    } else {
                        s
                    }
                })
                .collect()
        })
        .collect();
    (scales, floored)
}
