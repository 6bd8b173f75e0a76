//! Anomaly scores of one query clip against a memory bank.
//!
//! All scoring goes through [`match_query`], which computes the `N_b × R`
//! table of band inner products once. Global matching, the tied-reference
//! decomposition, sub-band matching and LDN normalization are all read off
//! that table, so a clip costs one pass over the bank regardless of how many
//! scores are requested.

mod table;

pub use table::{config_sidecar, read_scores, write_scores, ScoreColumn, ScoreRow};

use serde::{Deserialize, Serialize};

use crate::band_memory::MemoryBank;
use crate::cosine::{cos_from_parts, distance_from_cos, dot_f32, norm_sq};
use crate::dataio::{Aggregation, DmmAgg};
use crate::error::{Error, Result};
use crate::types::Pooling;

pub use crate::cosine::cosine_distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMatch {
    pub score: f64,
    /// Smallest index among the cosine maximizers.
    pub index: usize,
}

/// Band decomposition of the tied-reference global score.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionRecord {
    pub index: usize,
    /// `s_j`: per-band cosine to the tied reference.
    pub similarities: Vec<f64>,
    /// `β_j`: per-band energy weights.
    pub weights: Vec<f64>,
    pub rho: f64,
    /// `β̃_j = β_j / ρ`, uniform when `ρ = 0`.
    pub normalized_weights: Vec<f64>,
    pub s_glob: f64,
    pub s_uni: f64,
    /// `½(1 − ρ Σ β̃_j s_j)`. Equals `s_glob` whenever the bands tile the
    /// axis; with overlapping bands it is the score of the concatenated band
    /// vector.
    pub recomposed: f64,
}

/// Per-band nearest-neighbour result.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatch {
    pub score: f64,
    pub distances: Vec<f64>,
    pub indices: Vec<usize>,
}

/// Band inner products and distances of one query against every reference.
#[derive(Debug, Clone)]
pub struct QueryMatch {
    n_b: usize,
    r: usize,
    /// `dots[j * r + i] = <w_j(y), w_{i,j}>`.
    dots: Vec<f64>,
    /// `dist[j * r + i] = D(w_j(y), w_{i,j})`.
    dist: Vec<f64>,
    q_norms: Vec<f64>,
    global: GlobalMatch,
}

pub fn match_query(query: &[f64], bank: &MemoryBank) -> Result<QueryMatch> {
    if bank.is_empty() {
        return Err(Error::Empty("memory bank"));
    }
    let spec = bank.spec();
    if query.len() != spec.feature_len {
        return Err(Error::LengthMismatch {
            expected: spec.feature_len,
            found: query.len(),
        });
    }
    crate::error::ensure_finite(query)?;
    let (n_b, r) = (spec.n_bands(), bank.len());
    let mut dots = Vec::with_capacity(n_b * r);
    let mut dist = Vec::with_capacity(n_b * r);
    let mut q_norms = Vec::with_capacity(n_b);
    for (j, band) in bank.bands().iter().enumerate() {
        let q = &query[spec.range(j)];
        let qn = norm_sq(q);
        q_norms.push(qn);
        for i in 0..r {
            let d = dot_f32(q, band.row(i));
            dots.push(d);
            dist.push(distance_from_cos(cos_from_parts(d, qn, band.norm_sq(i))));
        }
    }

    let mut best = GlobalMatch {
        score: f64::INFINITY,
        index: 0,
    };
    let mut consider = |i: usize, cos: f64| {
        let score = distance_from_cos(cos);
        if score < best.score {
            best = GlobalMatch { score, index: i };
        }
    };
    match bank.full() {
        Some(full) => {
            let qn = norm_sq(query);
            for i in 0..r {
                consider(i, cos_from_parts(dot_f32(query, full.row(i)), qn, full.norm_sq(i)));
            }
        }
        None => {
            let qn: f64 = q_norms.iter().sum();
            for i in 0..r {
                let (mut d, mut wn) = (0.0, 0.0);
                for (j, band) in bank.bands().iter().enumerate() {
                    d += dots[j * r + i];
                    wn += band.norm_sq(i);
                }
                consider(i, cos_from_parts(d, qn, wn));
            }
        }
    }

    Ok(QueryMatch {
        n_b,
        r,
        dots,
        dist,
        q_norms,
        global: best,
    })
}

impl QueryMatch {
    pub fn n_bands(&self) -> usize {
        self.n_b
    }

    pub fn refs(&self) -> usize {
        self.r
    }

    /// `D(w_j(y), w_{i,j})`.
    pub fn distance(&self, j: usize, i: usize) -> f64 {
        self.dist[j * self.r + i]
    }

    pub fn band_distances(&self, j: usize) -> &[f64] {
        &self.dist[j * self.r..(j + 1) * self.r]
    }

    pub fn global(&self) -> GlobalMatch {
        self.global
    }

    pub fn decomposition(&self, bank: &MemoryBank) -> DecompositionRecord {
        self.decompose_at(bank, self.global.index)
    }

    fn decompose_at(&self, bank: &MemoryBank, i: usize) -> DecompositionRecord {
        let r = self.r;
        let bands = bank.bands();
        let w_norms: Vec<f64> = bands.iter().map(|b| b.norm_sq(i)).collect();
        let total = (self.q_norms.iter().sum::<f64>() * w_norms.iter().sum::<f64>()).sqrt();
        let similarities: Vec<f64> = (0..self.n_b)
            .map(|j| cos_from_parts(self.dots[j * r + i], self.q_norms[j], w_norms[j]))
            .collect();
        let weights: Vec<f64> = (0..self.n_b)
            .map(|j| {
                let num = (self.q_norms[j] * w_norms[j]).sqrt();
                if total == 0.0 {
                    0.0
                } else {
                    num / total
                }
            })
            .collect();
        let rho: f64 = weights.iter().sum();
        let normalized_weights: Vec<f64> = if rho == 0.0 {
            vec![1.0 / self.n_b as f64; self.n_b]
        } else {
            weights.iter().map(|b| b / rho).collect()
        };
        let coupled: f64 = normalized_weights.iter().zip(&similarities).map(|(b, s)| b * s).sum();
        let s_uni = (0..self.n_b).map(|j| self.dist[j * r + i]).sum::<f64>() / self.n_b as f64;
        DecompositionRecord {
            index: i,
            similarities,
            weights,
            rho,
            normalized_weights,
            s_glob: self.global.score,
            s_uni,
            recomposed: 0.5 * (1.0 - rho * coupled),
        }
    }

    /// Per-band minimum of `D / σ` (`σ ≡ 1` when `scales` is `None`).
    fn band_minima(&self, scales: Option<&[&[f64]]>) -> (Vec<f64>, Vec<usize>) {
        let mut distances = Vec::with_capacity(self.n_b);
        let mut indices = Vec::with_capacity(self.n_b);
        for j in 0..self.n_b {
            let row = self.band_distances(j);
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for (i, &d) in row.iter().enumerate() {
                let v = match scales {
                    Some(s) => d / s[j][i],
                    None => d,
                };
                if v < best {
                    best = v;
                    arg = i;
                }
            }
            distances.push(best);
            indices.push(arg);
        }
        (distances, indices)
    }

    /// Uniformly averaged band-restricted nearest-neighbour distance.
    pub fn subband(&self) -> BandMatch {
        let (distances, indices) = self.band_minima(None);
        BandMatch {
            score: mean(&distances),
            distances,
            indices,
        }
    }

    /// LDN-normalized band distances aggregated by `rule`. `k = 0` uses the
    /// raw distances.
    pub fn normalized(&self, bank: &MemoryBank, k: usize, rule: Aggregation) -> Result<BandMatch> {
        let (distances, indices) = if k == 0 {
            self.band_minima(None)
        } else {
            let scales = (0..self.n_b).map(|j| bank.scales(j, k)).collect::<Result<Vec<_>>>()?;
            self.band_minima(Some(&scales))
        };
        Ok(BandMatch {
            score: aggregate_bands(&distances, rule)?,
            distances,
            indices,
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn score_global(query: &[f64], bank: &MemoryBank) -> Result<GlobalMatch> {
    Ok(match_query(query, bank)?.global())
}

/// Decomposition at a given reference index (normally the global match).
pub fn decompose_global(query: &[f64], bank: &MemoryBank, index: usize) -> Result<DecompositionRecord> {
    if index >= bank.len() {
        return Err(Error::invalid(format!("reference index {index} outside bank of {}", bank.len())));
    }
    Ok(match_query(query, bank)?.decompose_at(bank, index))
}

pub fn score_subband(query: &[f64], bank: &MemoryBank) -> Result<BandMatch> {
    Ok(match_query(query, bank)?.subband())
}

pub fn score_subband_ldn(query: &[f64], bank: &MemoryBank, k: usize) -> Result<BandMatch> {
    match_query(query, bank)?.normalized(bank, k, Aggregation::Average)
}

pub fn aggregate_bands(scores: &[f64], rule: Aggregation) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("band score list"));
    }
    Ok(match rule {
        Aggregation::Average => mean(scores),
        Aggregation::Maximum => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Minimum => scores.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Rule combining the Tmean and Tmax clip scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    Mean,
    Max,
    Min,
}

impl DmmAgg {
    pub fn fusion(self) -> Option<Fusion> {
        match self {
            DmmAgg::Mean => Some(Fusion::Mean),
            DmmAgg::Max => Some(Fusion::Max),
            DmmAgg::Min => Some(Fusion::Min),
            DmmAgg::Off => None,
        }
    }
}

pub fn dmm_fuse(s_tmean: f64, s_tmax: f64, rule: Fusion) -> f64 {
    match rule {
        Fusion::Mean => 0.5 * (s_tmean + s_tmax),
        Fusion::Max => s_tmean.max(s_tmax),
        Fusion::Min => s_tmean.min(s_tmax),
    }
}

/// Scoring options taken from the run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOptions {
    pub k_list: Vec<usize>,
    pub aggregation: Aggregation,
    pub dmm: DmmAgg,
}

impl ScoreOptions {
    pub fn from_config(cfg: &crate::dataio::RunConfig) -> Self {
        ScoreOptions {
            k_list: cfg.k_list.clone(),
            aggregation: cfg.aggregation,
            dmm: cfg.dmm_agg,
        }
    }
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            k_list: vec![1],
            aggregation: Aggregation::Average,
            dmm: DmmAgg::Off,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewScores {
    pub view: Pooling,
    pub s_glob: f64,
    pub s_uni: f64,
    pub s_sub: f64,
    /// `S_uni − S_sub`.
    pub p: f64,
    /// `2(S_uni − S_glob)`.
    pub b: f64,
    pub rho: f64,
    pub index: usize,
    /// `(K, S_norm_sub)` in configured order, aggregated by the configured rule.
    pub normalized: Vec<(usize, f64)>,
}

impl ViewScores {
    pub fn from_match(view: Pooling, m: &QueryMatch, bank: &MemoryBank, opts: &ScoreOptions) -> Result<Self> {
        let dec = m.decomposition(bank);
        let sub = m.subband();
        let normalized = opts
            .k_list
            .iter()
            .map(|&k| Ok((k, m.normalized(bank, k, opts.aggregation)?.score)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ViewScores {
            view,
            s_glob: dec.s_glob,
            s_uni: dec.s_uni,
            s_sub: sub.score,
            p: dec.s_uni - sub.score,
            b: 2.0 * (dec.s_uni - dec.s_glob),
            rho: dec.rho,
            index: dec.index,
            normalized,
        })
    }

    pub fn normalized_at(&self, k: usize) -> Option<f64> {
        self.normalized.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipScores {
    pub clip_id: String,
    pub views: Vec<ViewScores>,
    /// `(K, S_DMM)` when fusion is enabled.
    pub dmm: Option<Vec<(usize, f64)>>,
}

impl ClipScores {
    pub fn view(&self, v: Pooling) -> Option<&ViewScores> {
        self.views.iter().find(|s| s.view == v)
    }

    /// Flattens into score-table rows, one per (view, K).
    pub fn rows(&self) -> Vec<ScoreRow> {
        let mut out = Vec::new();
        for v in &self.views {
            for &(k, s) in &v.normalized {
                let dmm = self
                    .dmm
                    .as_ref()
                    .and_then(|d| d.iter().find(|(kk, _)| *kk == k).map(|(_, x)| *x));
                out.push(ScoreRow {
                    clip_id: self.clip_id.clone(),
                    view: v.view,
                    s_glob: v.s_glob,
                    s_uni: v.s_uni,
                    s_sub: v.s_sub,
                    p: v.p,
                    b: v.b,
                    k,
                    s_norm_sub: s,
                    s_dmm: dmm,
                });
            }
        }
        out
    }
}

/// Banks are looked up by view.
pub fn score_clip(
    clip_id: &str,
    features: &[(Pooling, &[f64])],
    banks: &[(Pooling, &MemoryBank)],
    opts: &ScoreOptions,
) -> Result<ClipScores> {
    let mut views = Vec::with_capacity(features.len());
    for &(view, f) in features {
        let bank = banks
            .iter()
            .find(|(v, _)| *v == view)
            .map(|(_, b)| *b)
            .ok_or_else(|| Error::invalid(format!("no bank for view {view}")))?;
        let m = match_query(f, bank)?;
        views.push(ViewScores::from_match(view, &m, bank, opts)?);
    }
    let dmm = fuse_views(&views, opts.dmm)?;
    Ok(ClipScores {
        clip_id: clip_id.to_string(),
        views,
        dmm,
    })
}

pub(crate) fn fuse_views(views: &[ViewScores], dmm: DmmAgg) -> Result<Option<Vec<(usize, f64)>>> {
    let Some(rule) = dmm.fusion() else {
        return Ok(None);
    };
    let find = |p: Pooling| {
        views
            .iter()
            .find(|v| v.view == p)
            .ok_or_else(|| Error::invalid(format!("DMM fusion needs the {p} view")))
    };
    let (mean_v, max_v) = (find(Pooling::Tmean)?, find(Pooling::Tmax)?);
    Ok(Some(
        mean_v
            .normalized
            .iter()
            .map(|&(k, a)| {
                let b = max_v.normalized_at(k).expect("views share the K list");
                (k, dmm_fuse(a, b, rule))
            })
            .collect(),
    ))
}
