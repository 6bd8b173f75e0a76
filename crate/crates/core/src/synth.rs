//! Deterministic synthetic corpora for tests, examples and benchmarks.
//!
//! Every clip draws from its own ChaCha stream seeded by a splitmix64 hash of
//! the corpus seed and the clip's ordinal, so parallel generation yields the
//! same bits as a sequential run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use crate::dataio::{save_manifest, write_wav_i16, ClipRecord};
use crate::error::{Error, Result};
use crate::types::{AxisKind, ClipVector, Domain, Label, Pooling, Split};

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed ^ tag.rotate_left(32)) ^ index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Anomaly {
    /// Adds a fixed pattern of the given magnitude inside one true band.
    BandLocalShift { band: usize, magnitude: f64 },
    /// Adds the pattern to every band.
    BroadbandShift { magnitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub label: String,
    /// Scales energy and perturbation of the regime bands.
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_refs: usize,
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub feature_len: usize,
    pub n_bands_true: usize,
    /// Standard deviation of the shared per-band perturbation, one per band.
    pub band_scale: Vec<f64>,
    /// Per-dimension jitter relative to the band scale.
    pub dim_jitter: f64,
    /// Energy of each band.
    pub energy: Vec<f64>,
    pub anomaly: Anomaly,
    /// Clips are assigned to regimes round robin. Empty means no regimes.
    pub regimes: Vec<Regime>,
    /// Bands affected by the regime multiplier.
    pub regime_bands: Vec<usize>,
}

impl SynthSpec {
    /// Independent unit-scale perturbation on every band, equal energies and a
    /// local shift in band 0.
    pub fn new(seed: u64, n_refs: usize, n_normal: usize, n_anomalous: usize, feature_len: usize, n_bands_true: usize) -> Self {
        SynthSpec {
            seed,
            n_refs,
            n_normal,
            n_anomalous,
            feature_len,
            n_bands_true,
            band_scale: vec![0.1; n_bands_true],
            dim_jitter: 0.3,
            energy: vec![1.0; n_bands_true],
            anomaly: Anomaly::BandLocalShift {
                band: 0,
                magnitude: 0.1,
            },
            regimes: Vec::new(),
            regime_bands: (n_bands_true / 2..n_bands_true).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nb = self.n_bands_true;
        if self.n_refs == 0 || self.n_normal + self.n_anomalous == 0 {
            return Err(Error::invalid("synthetic corpus needs references and test clips"));
        }
        if nb == 0 || self.feature_len < nb || !self.feature_len.is_multiple_of(nb) {
            return Err(Error::invalid(format!(
                "feature length {} must be a positive multiple of the band count {nb}",
                self.feature_len
            )));
        }
        if self.band_scale.len() != nb || self.energy.len() != nb {
            return Err(Error::invalid("band_scale and energy need one entry per band"));
        }
        let scales = self.band_scale.iter().chain([&self.dim_jitter]);
        if scales.chain(&self.energy).any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::invalid("scales and energies must be finite and non-negative"));
        }
        if let Anomaly::BandLocalShift { band, .. } = self.anomaly {
            if band >= nb {
                return Err(Error::invalid(format!("anomaly band {band} is out of range")));
            }
        }
        if self.regime_bands.iter().any(|&b| b >= nb) || self.regimes.iter().any(|r| !(r.multiplier > 0.0)) {
            return Err(Error::invalid("invalid regime definition"));
        }
        Ok(())
    }

    fn band_width(&self) -> usize {
        self.feature_len / self.n_bands_true
    }
}

/// Generated features plus their manifest rows, in the order refs then tests.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCorpus {
    pub refs: Vec<ClipVector>,
    pub tests: Vec<ClipVector>,
    pub ref_records: Vec<ClipRecord>,
    pub test_records: Vec<ClipRecord>,
}

struct Shapes {
    template: Vec<f64>,
    pattern: Vec<f64>,
    shift: Vec<f64>,
}

fn shapes(spec: &SynthSpec) -> Shapes {
    let mut rng = stream(spec.seed, 1, 0);
    let f = spec.feature_len;
    let template = (0..f).map(|_| rng.random_range(0.5..1.5)).collect();
    let pattern = (0..f).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let shift = (0..f).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    Shapes {
        template,
        pattern,
        shift,
    }
}

fn draw_clip(spec: &SynthSpec, sh: &Shapes, index: usize, anomalous: bool, regime: Option<&Regime>) -> Vec<f64> {
    let mut rng = stream(spec.seed, 2, index as u64);
    let w = spec.band_width();
    let mut v = vec![0.0; spec.feature_len];
    for j in 0..spec.n_bands_true {
        let mult = match regime {
            Some(r) if spec.regime_bands.contains(&j) => r.multiplier,
            _ => 1.0,
        };
        let energy = spec.energy[j] * mult;
        let scale = spec.band_scale[j] * mult;
        let g: f64 = rng.sample(StandardNormal);
        let shifted = match spec.anomaly {
            _ if !anomalous => 0.0,
            Anomaly::BandLocalShift { band, magnitude } if band == j => magnitude,
            Anomaly::BandLocalShift { .. } => 0.0,
            Anomaly::BroadbandShift { magnitude } => magnitude,
        };
        for d in j * w..(j + 1) * w {
            let n: f64 = rng.sample(StandardNormal);
            let dev = scale * (g * sh.pattern[d] + spec.dim_jitter * n);
            v[d] = energy * (sh.template[d] + dev + shifted * sh.shift[d]);
        }
    }
    v
}

fn record(id: String, label: Label, split: Split, regime: Option<&Regime>) -> ClipRecord {
    ClipRecord {
        path: PathBuf::from(format!("{id}.f32")),
        clip_id: id,
        label,
        split,
        machine_type: "synth".into(),
        section: "00".into(),
        domain: Domain::None,
        regime: regime.map(|r| r.label.clone()),
    }
}

pub fn generate_feature_corpus(spec: &SynthSpec) -> Result<FeatureCorpus> {
    spec.validate()?;
    let sh = shapes(spec);
    let regime = |i: usize| (!spec.regimes.is_empty()).then(|| &spec.regimes[i % spec.regimes.len()]);
    let n_test = spec.n_normal + spec.n_anomalous;
    // Ordinals: refs first, then normal tests, then anomalies.
    let clips: Vec<(ClipVector, ClipRecord)> = (0..spec.n_refs + n_test)
        .into_par_iter()
        .map(|i| {
            let (id, label, split, r) = if i < spec.n_refs {
                (format!("ref_{i:05}"), Label::Normal, Split::Train, regime(i))
            } else {
                let t = i - spec.n_refs;
                let label = if t < spec.n_normal { Label::Normal } else { Label::Anomalous };
                (format!("test_{t:05}"), label, Split::Test, regime(t))
            };
            let v = draw_clip(spec, &sh, i, label == Label::Anomalous, r);
            let cv = ClipVector::new(v, AxisKind::MelBand, Pooling::Tmean)?;
            Ok((cv, record(id, label, split, r)))
        })
        .collect::<Result<_>>()?;
    let (refs, tests) = clips.split_at(spec.n_refs);
    let unzip = |v: &[(ClipVector, ClipRecord)]| -> (Vec<ClipVector>, Vec<ClipRecord>) { v.iter().cloned().unzip() };
    let (refs, ref_records) = unzip(refs);
    let (tests, test_records) = unzip(tests);
    Ok(FeatureCorpus {
        refs,
        tests,
        ref_records,
        test_records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub seed: u64,
    pub n_refs: usize,
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub sample_rate: u32,
    pub seconds: f64,
    /// Machine hum partials in Hz.
    pub tones: Vec<f64>,
    /// Relative random per-clip variation of the partial amplitudes.
    pub tone_jitter: f64,
    /// Standard deviation of the low-passed background noise.
    pub noise_level: f64,
    pub anomaly_hz: f64,
    pub anomaly_amplitude: f64,
    pub machine_type: String,
    pub section: String,
    /// Every third clip is marked as target domain when set.
    pub with_domains: bool,
}

impl Default for WaveSpec {
    fn default() -> Self {
        WaveSpec {
            seed: 0,
            n_refs: 20,
            n_normal: 10,
            n_anomalous: 10,
            sample_rate: 16_000,
            seconds: 1.0,
            tones: vec![120.0, 480.0, 1250.0],
            tone_jitter: 0.2,
            noise_level: 0.02,
            anomaly_hz: 3000.0,
            anomaly_amplitude: 0.05,
            machine_type: "synth".into(),
            section: "00".into(),
            with_domains: false,
        }
    }
}

impl WaveSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_refs == 0 || self.n_normal + self.n_anomalous == 0 {
            return Err(Error::invalid("synthetic corpus needs references and test clips"));
        }
        let nyq = self.sample_rate as f64 / 2.0;
        if !(self.seconds > 0.0) || self.tones.iter().chain([&self.anomaly_hz]).any(|&f| !(f > 0.0 && f < nyq)) {
            return Err(Error::invalid("tone frequencies must lie below Nyquist and duration must be positive"));
        }
        Ok(())
    }
}

fn synth_wave(spec: &WaveSpec, index: usize, anomalous: bool) -> Vec<f64> {
    let mut rng = stream(spec.seed, 3, index as u64);
    let n = (spec.seconds * spec.sample_rate as f64).round() as usize;
    let sr = spec.sample_rate as f64;
    let partials: Vec<(f64, f64, f64)> = spec
        .tones
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let amp = 0.2 / (k + 1) as f64 * (1.0 + spec.tone_jitter * rng.random_range(-1.0..1.0));
            (f, amp, rng.random_range(0.0..TAU))
        })
        .collect();
    let anomaly_phase = rng.random_range(0.0..TAU);
    let mut lp = 0.0;
    (0..n)
        .map(|t| {
            let time = t as f64 / sr;
            let mut x: f64 = partials.iter().map(|&(f, a, ph)| a * (TAU * f * time + ph).sin()).sum();
            let white: f64 = rng.sample(StandardNormal);
            lp = 0.9 * lp + 0.1 * white;
            x += spec.noise_level * white * 0.3 + spec.noise_level * lp * 3.0;
            if anomalous {
                x += spec.anomaly_amplitude * (TAU * spec.anomaly_hz * time + anomaly_phase).sin();
            }
            x
        })
        .collect()
}

/// Writes `<dir>/<clip_id>.wav` for every clip and `<dir>/manifest.csv`.
/// Returns the manifest path.
pub fn generate_wave_corpus(spec: &WaveSpec, dir: impl AsRef<Path>) -> Result<PathBuf> {
    spec.validate()?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let total = spec.n_refs + spec.n_normal + spec.n_anomalous;
    let records: Vec<ClipRecord> = (0..total)
        .into_par_iter()
        .map(|i| {
            let (id, label, split) = if i < spec.n_refs {
                (format!("train_{i:05}"), Label::Normal, Split::Train)
            } else {
                let t = i - spec.n_refs;
                let label = if t < spec.n_normal { Label::Normal } else { Label::Anomalous };
                (format!("test_{t:05}"), label, Split::Test)
            };
            let wave = synth_wave(spec, i, label == Label::Anomalous);
            let file = format!("{id}.wav");
            write_wav_i16(dir.join(&file), &wave, spec.sample_rate)?;
            let domain = match (spec.with_domains, i % 3 == 0) {
                (false, _) => Domain::None,
                (true, true) => Domain::Target,
                (true, false) => Domain::Source,
            };
            Ok(ClipRecord {
                clip_id: id,
                path: file.into(),
                label,
                split,
                machine_type: spec.machine_type.clone(),
                section: spec.section.clone(),
                domain,
                regime: None,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = dir.join("manifest.csv");
    save_manifest(&manifest, &records)?;
    Ok(manifest)
}
