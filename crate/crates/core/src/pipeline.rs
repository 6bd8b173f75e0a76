//! Clip-vector extraction for every frontend and the on-disk feature cache.
//!
//! Cached vectors live at `<dir>/<clip_id>.<view>.f32` as `[F]` tensors. They
//! are stored in f32, the same precision the memory bank keeps.

use rayon::prelude::*;
use std::path::{Path, PathBuf};

use crate::dataio::{load_embedding, load_waveform, prepare, read_tensor, write_tensor, ClipRecord, Frontend, RunConfig};
use crate::dsp::{logmel, mfcc_with, temporal_pool, Dct, MelFilterbank, Stft};
use crate::embedding::pool_patch_grid;
use crate::error::{Error, Result};
use crate::lpc::{burg_fit, lpc_spectrum, LpcSpectrumConfig};
use crate::types::{AxisKind, ClipVector, Pooling};

pub fn axis_for(frontend: Frontend) -> AxisKind {
    match frontend {
        Frontend::Logmel => AxisKind::MelBand,
        Frontend::Mfcc => AxisKind::CepstralCoeff,
        Frontend::LpcSpectrum => AxisKind::LpcBin,
        Frontend::Embedding => AxisKind::EmbeddingBand,
    }
}

enum Plan {
    Spectral { stft: Stft, mel: MelFilterbank, dct: Option<Dct> },
    Lpc(LpcSpectrumConfig),
    Embedding,
}

/// Precomputed transforms for one run configuration.
pub struct Extractor {
    cfg: RunConfig,
    views: Vec<Pooling>,
    plan: Plan,
}

impl Extractor {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = match cfg.frontend {
            Frontend::Logmel | Frontend::Mfcc => {
                let n_fft = cfg.frame_len();
                let dct = (cfg.frontend == Frontend::Mfcc).then(|| Dct::new(cfg.n_mels, cfg.n_mfcc)).transpose()?;
                Plan::Spectral {
                    stft: Stft::new(n_fft, cfg.frame_shift())?,
                    mel: MelFilterbank::new(cfg.n_mels, n_fft, cfg.sample_rate, cfg.f_min, cfg.f_max)?,
                    dct,
                }
            }
            Frontend::LpcSpectrum => Plan::Lpc(LpcSpectrumConfig {
                n_bins: cfg.lpc_bins,
                f_max: cfg.lpc_f_max(),
                sample_rate: cfg.sample_rate as f64,
            }),
            Frontend::Embedding => Plan::Embedding,
        };
        Ok(Extractor {
            cfg: cfg.clone(),
            views: cfg.views(),
            plan,
        })
    }

    pub fn views(&self) -> &[Pooling] {
        &self.views
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// One vector per configured view from a mono waveform at the configured
    /// rate. The signal is first fixed to the configured clip length.
    pub fn from_waveform(&self, samples: &[f64]) -> Result<Vec<ClipVector>> {
        let wave = prepare(samples.to_vec(), self.cfg.sample_rate, self.cfg.clip_seconds);
        match &self.plan {
            Plan::Spectral { stft, mel, dct } => {
                let frames = logmel(&stft.power(&wave.samples)?, mel, self.cfg.log_floor)?;
                let frames = match dct {
                    Some(d) => mfcc_with(&frames, d)?,
                    None => frames,
                };
                self.views.iter().map(|&v| temporal_pool(&frames, v)).collect()
            }
            Plan::Lpc(lc) => {
                let model = burg_fit(&wave.samples, self.cfg.lpc_order)?;
                let s = lpc_spectrum(&model, lc)?;
                if s.clamped > 0 {
                    log::warn!("{} LPC bins clamped to the magnitude ceiling", s.clamped);
                }
                Ok(vec![s.vector])
            }
            Plan::Embedding => Err(Error::invalid("the embedding frontend reads patch grids, not waveforms")),
        }
    }

    /// Features of one manifest entry; `path` is resolved against
    /// `manifest_dir`.
    pub fn extract(&self, rec: &ClipRecord, manifest_dir: &Path) -> Result<Vec<ClipVector>> {
        let path = rec.resolve(manifest_dir);
        match self.plan {
            Plan::Embedding => {
                let grid = load_embedding(&path)?;
                self.views.iter().map(|&v| Ok(pool_patch_grid(&grid, v)?.vector)).collect()
            }
            _ => {
                let wave = load_waveform(&path, self.cfg.clip_seconds, self.cfg.sample_rate)?;
                self.from_waveform(&wave.samples)
            }
        }
    }
}

pub fn cache_path(dir: &Path, clip_id: &str, view: Pooling) -> PathBuf {
    dir.join(format!("{clip_id}.{view}.f32"))
}

pub fn write_cached(dir: &Path, clip_id: &str, v: &ClipVector) -> Result<PathBuf> {
    let path = cache_path(dir, clip_id, v.pooling);
    let values: Vec<f32> = v.values.iter().map(|&x| x as f32).collect();
    write_tensor(&path, &[values.len()], &values)?;
    Ok(path)
}

pub fn read_cached(dir: &Path, clip_id: &str, view: Pooling, axis: AxisKind) -> Result<ClipVector> {
    let (shape, values) = read_tensor(cache_path(dir, clip_id, view))?;
    if shape.len() != 1 {
        return Err(Error::invalid(format!("cached feature for {clip_id} has shape {shape:?}, expected [F]")));
    }
    ClipVector::new(values.into_iter().map(f64::from).collect(), axis, view)
}

/// Extracts every manifest clip into `out_dir`. On failure the files written
/// by this call are removed and the first error is returned.
pub fn extract_to_cache(records: &[ClipRecord], manifest_dir: &Path, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let ex = Extractor::new(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results: Vec<Result<Vec<PathBuf>>> = records
        .par_iter()
        .map(|r| {
            let vs = ex.extract(r, manifest_dir).map_err(|e| Error::invalid(format!("clip {}: {e}", r.clip_id)))?;
            vs.iter().map(|v| write_cached(out_dir, &r.clip_id, v)).collect()
        })
        .collect();
    let mut written = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(p) => written.extend(p),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        for p in &written {
            let _ = std::fs::remove_file(p);
            let _ = std::fs::remove_file(crate::dataio::sidecar_path(p));
        }
        return Err(e);
    }
    Ok(written)
}

/// Loads cached vectors of one view for the given records, in order.
pub fn load_cached(records: &[&ClipRecord], dir: &Path, view: Pooling, axis: AxisKind) -> Result<Vec<ClipVector>> {
    records.par_iter().map(|r| read_cached(dir, &r.clip_id, view, axis)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{save_embedding, EmbeddingGrid, PoolingMode};
    use crate::types::{Domain, Label, Split};

    fn tone(n: usize, hz: f64, sr: f64) -> Vec<f64> {
        (0..n).map(|t| 0.3 * (std::f64::consts::TAU * hz * t as f64 / sr).sin()).collect()
    }

    fn short_cfg(frontend: Frontend) -> RunConfig {
        RunConfig {
            frontend,
            clip_seconds: 0.5,
            pooling: PoolingMode::Both,
            lpc_order: 8,
            lpc_bins: 64,
            ..RunConfig::default()
        }
    }

    #[test]
    fn vector_lengths_per_frontend() {
        let x = tone(8000, 1000.0, 16000.0);
        let lm = Extractor::new(&short_cfg(Frontend::Logmel)).unwrap().from_waveform(&x).unwrap();
        assert_eq!(lm.len(), 2);
        assert_eq!((lm[0].len(), lm[0].pooling, lm[1].pooling), (128, Pooling::Tmean, Pooling::Tmax));
        let mf = Extractor::new(&short_cfg(Frontend::Mfcc)).unwrap().from_waveform(&x).unwrap();
        assert_eq!((mf[0].len(), mf[0].axis), (90, AxisKind::CepstralCoeff));
        let lpc = Extractor::new(&short_cfg(Frontend::LpcSpectrum)).unwrap().from_waveform(&x).unwrap();
        assert_eq!((lpc.len(), lpc[0].len(), lpc[0].pooling), (1, 64, Pooling::Direct));
        assert!(Extractor::new(&short_cfg(Frontend::Embedding)).unwrap().from_waveform(&x).is_err());
    }

    #[test]
    fn cache_round_trip_and_cleanup() {
        let dir = tempfile::tempdir().unwrap();
        let wav = dir.path().join("a.wav");
        crate::dataio::write_wav_i16(&wav, &tone(8000, 440.0, 16000.0), 16000).unwrap();
        let grid = EmbeddingGrid::new((0..24).map(|i| i as f32).collect(), 2, 3, 4).unwrap();
        save_embedding(dir.path().join("e.f32"), &grid).unwrap();
        let rec = |id: &str, path: &str| ClipRecord {
            clip_id: id.into(),
            path: path.into(),
            label: Label::Normal,
            split: Split::Train,
            machine_type: "fan".into(),
            section: "00".into(),
            domain: Domain::None,
            regime: None,
        };
        let out = dir.path().join("feat");
        let cfg = short_cfg(Frontend::Logmel);
        let files = extract_to_cache(&[rec("a", "a.wav")], dir.path(), &cfg, &out).unwrap();
        assert_eq!(files.len(), 2);
        let first = std::fs::read(&files[0]).unwrap();
        let back = read_cached(&out, "a", Pooling::Tmean, AxisKind::MelBand).unwrap();
        let direct = Extractor::new(&cfg).unwrap().extract(&rec("a", "a.wav"), dir.path()).unwrap();
        for (x, y) in back.values.iter().zip(&direct[0].values) {
            assert_eq!(*x, *y as f32 as f64);
        }
        extract_to_cache(&[rec("a", "a.wav")], dir.path(), &cfg, &out).unwrap();
        assert_eq!(std::fs::read(&files[0]).unwrap(), first);

        let out2 = dir.path().join("bad");
        let err = extract_to_cache(&[rec("b", "a.wav"), rec("c", "missing.wav")], dir.path(), &cfg, &out2).unwrap_err();
        assert!(err.to_string().contains("clip c"));
        assert_eq!(std::fs::read_dir(&out2).unwrap().count(), 0);

        let ecfg = RunConfig {
            frontend: Frontend::Embedding,
            ..short_cfg(Frontend::Logmel)
        };
        let v = Extractor::new(&ecfg).unwrap().extract(&rec("e", "e.f32"), dir.path()).unwrap();
        assert_eq!(v[0].values[..4], [6.0, 7.0, 8.0, 9.0]);
        assert_eq!(v[1].values[..4], [12.0, 13.0, 14.0, 15.0]);
    }
}
