//! Per-clip latency of each frontend: feature extraction and the full path
//! from waveform to anomaly score against a random memory bank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

use crate::band_memory::{make_band_spec, MemoryBank};
use crate::dataio::{Frontend, PoolingMode, RunConfig};
use crate::error::{Error, Result};
use crate::pipeline::Extractor;
use crate::scoring::{score_clip, ScoreOptions};
use crate::types::{AxisKind, ClipVector, Pooling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_ms: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_ms: f64,
}

impl Timing {
    pub fn from_samples(ms: &[f64]) -> Self {
        let n = ms.len() as f64;
        let mean = ms.iter().sum::<f64>() / n;
        let std = if ms.len() < 2 {
            0.0
        } else {
            (ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Timing { mean_ms: mean, std_ms: std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub frontend: String,
    pub output_dim: usize,
    pub feature: Timing,
    pub end_to_end: Timing,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostOptions {
    pub n_runs: usize,
    pub bank_size: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for CostOptions {
    fn default() -> Self {
        CostOptions {
            n_runs: 5,
            bank_size: 500,
            k: 1,
            seed: 0,
        }
    }
}

/// A machine-like test signal: harmonic hum plus white noise.
pub fn test_signal(cfg: &RunConfig, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = cfg.sample_rate as f64;
    let n = (cfg.clip_seconds * sr).round() as usize;
    (0..n)
        .map(|t| {
            let time = t as f64 / sr;
            let hum: f64 = [100.0, 300.0, 1250.0]
                .iter()
                .enumerate()
                .map(|(k, f)| 0.2 / (k + 1) as f64 * (std::f64::consts::TAU * f * time).sin())
                .sum();
            hum + 0.02 * rng.random_range(-1.0..1.0)
        })
        .collect()
}

fn random_bank(dim: usize, cfg: &RunConfig, axis: AxisKind, view: Pooling, opts: &CostOptions) -> Result<MemoryBank> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let refs: Vec<ClipVector> = (0..opts.bank_size)
        .map(|_| ClipVector::new((0..dim).map(|_| rng.random_range(0.1..1.0)).collect(), axis, view))
        .collect::<Result<_>>()?;
    let (c, s) = cfg.band();
    let c = c.min(dim);
    MemoryBank::build(&refs, make_band_spec(dim, c, s.min(c))?, &[opts.k], "bench")
}

fn score_opts(cfg: &RunConfig, opts: &CostOptions) -> ScoreOptions {
    ScoreOptions {
        k_list: vec![opts.k],
        ..ScoreOptions::from_config(cfg)
    }
}

/// Times waveform → features and waveform → score for one frontend. The
/// first run warms caches and is not recorded.
pub fn bench_frontend(label: &str, cfg: &RunConfig, opts: &CostOptions) -> Result<CostRow> {
    if opts.n_runs == 0 {
        return Err(Error::invalid("n_runs must be >= 1"));
    }
    let ex = Extractor::new(cfg)?;
    let wave = test_signal(cfg, opts.seed);
    let probe = ex.from_waveform(&wave)?;
    let dim = probe[0].len();
    let banks: Vec<(Pooling, MemoryBank)> = probe
        .iter()
        .map(|v| Ok((v.pooling, random_bank(dim, cfg, v.axis, v.pooling, opts)?)))
        .collect::<Result<_>>()?;
    let bank_refs: Vec<(Pooling, &MemoryBank)> = banks.iter().map(|(p, b)| (*p, b)).collect();
    let so = score_opts(cfg, opts);
    let (mut feat, mut e2e) = (Vec::new(), Vec::new());
    for run in 0..=opts.n_runs {
        let t0 = Instant::now();
        let views = ex.from_waveform(&wave)?;
        let t1 = Instant::now();
        let feats: Vec<(Pooling, &[f64])> = views.iter().map(|v| (v.pooling, v.as_slice())).collect();
        let scores = score_clip("bench", &feats, &bank_refs, &so)?;
        std::hint::black_box(&scores);
        let t2 = Instant::now();
        if run > 0 {
            feat.push((t1 - t0).as_secs_f64() * 1e3);
            e2e.push((t2 - t0).as_secs_f64() * 1e3);
        }
    }
    Ok(CostRow {
        frontend: label.into(),
        output_dim: dim,
        feature: Timing::from_samples(&feat),
        end_to_end: Timing::from_samples(&e2e),
        n_runs: opts.n_runs,
    })
}

/// Scoring cost of an already extracted vector. Feature time is 0.
pub fn bench_cached(label: &str, dim: usize, cfg: &RunConfig, opts: &CostOptions) -> Result<CostRow> {
    if opts.n_runs == 0 {
        return Err(Error::invalid("n_runs must be >= 1"));
    }
    let axis = AxisKind::EmbeddingBand;
    let bank = random_bank(dim, cfg, axis, Pooling::Tmean, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let q: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..1.0)).collect();
    let so = score_opts(cfg, opts);
    let mut e2e = Vec::new();
    for run in 0..=opts.n_runs {
        let t0 = Instant::now();
        let s = score_clip("bench", &[(Pooling::Tmean, &q)], &[(Pooling::Tmean, &bank)], &so)?;
        std::hint::black_box(&s);
        if run > 0 {
            e2e.push(t0.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(CostRow {
        frontend: label.into(),
        output_dim: dim,
        feature: Timing::from_samples(&vec![0.0; opts.n_runs]),
        end_to_end: Timing::from_samples(&e2e),
        n_runs: opts.n_runs,
    })
}

/// The handcrafted frontends on the Tmean view plus cached 6144-dim
/// embeddings, derived from `base` (band and K settings are kept).
pub fn bench_all(base: &RunConfig, opts: &CostOptions) -> Result<Vec<CostRow>> {
    let with = |frontend: Frontend| RunConfig {
        frontend,
        pooling: PoolingMode::Tmean,
        dmm_agg: crate::dataio::DmmAgg::Off,
        band_c: None,
        band_s: None,
        ..base.clone()
    };
    let mut rows = vec![
        bench_frontend("Log-Mel (Tmean)", &with(Frontend::Logmel), opts)?,
        bench_frontend("MFCC (Tmean)", &with(Frontend::Mfcc), opts)?,
        bench_frontend("LPC spectrum", &with(Frontend::LpcSpectrum), opts)?,
    ];
    rows.push(bench_cached("Cached embedding (Tmean)", 6144, &with(Frontend::Embedding), opts)?);
    Ok(rows)
}

/// Plain-text table with one `mean ± std` cell per timing.
pub fn format_cost_table(rows: &[CostRow]) -> String {
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            let t = |x: &Timing| format!("{:.2} ± {:.2}", x.mean_ms, x.std_ms);
            [r.frontend.clone(), r.output_dim.to_string(), t(&r.feature), t(&r.end_to_end)]
        })
        .collect();
    let header = ["Frontend", "Output dim", "Feat. (ms)", "E2E (ms)"];
    let mut width = header.map(|h| h.chars().count());
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let line = |c: &[String]| {
        let mut out = String::new();
        for (i, (s, w)) in c.iter().zip(width).enumerate() {
            let pad = w - s.chars().count();
            if i > 0 {
                out.push_str(" | ");
            }
            if i == 0 {
                write!(out, "{s}{}", " ".repeat(pad)).unwrap();
            } else {
                write!(out, "{}{s}", " ".repeat(pad)).unwrap();
            }
        }
        out.trim_end().to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-|-"));
    out.push('\n');
    for c in &cells {
        out.push_str(&line(c));
        out.push('\n');
    }
    out
}
