//! Run configuration. Every key is optional; the defaults reproduce the
//! baseline handcrafted frontend (16 kHz, 10 s clips, 64/32 ms frames,
//! 128 mel bins over 0-8000 Hz, 90 MFCCs, LPC order 60 sampled at 8000 bins).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Pooling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frontend {
    Logmel,
    Mfcc,
    LpcSpectrum,
    Embedding,
}

impl Frontend {
    pub fn as_str(self) -> &'static str {
        match self {
            Frontend::Logmel => "logmel",
            Frontend::Mfcc => "mfcc",
            Frontend::LpcSpectrum => "lpc_spectrum",
            Frontend::Embedding => "embedding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingMode {
    Tmean,
    Tmax,
    Both,
}

/// Band aggregation rule applied to the per-band scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Average,
    Maximum,
    Minimum,
}

/// Fusion rule across the Tmean and Tmax views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmmAgg {
    Mean,
    Max,
    Min,
    Off,
}

/// Which anomalies enter the domain-conditional AUCs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainAucMode {
    /// Normals of the domain against anomalies of every domain.
    Mixed,
    /// Normals and anomalies of the same domain only.
    SameDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub frontend: Frontend,
    pub sample_rate: u32,
    pub clip_seconds: f64,
    pub frame_ms: f64,
    pub shift_ms: f64,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub n_mfcc: usize,
    pub log_floor: f64,
    pub lpc_order: usize,
    pub lpc_bins: usize,
    /// Upper edge of the LPC frequency grid; `None` means Nyquist.
    pub lpc_f_max: Option<f64>,
    pub pooling: PoolingMode,
    /// Band window; `None` selects the frontend default.
    pub band_c: Option<usize>,
    /// Band stride; `None` means equal to the window.
    pub band_s: Option<usize>,
    /// LDN neighbourhood sizes. `0` scores the raw band distances.
    pub k_list: Vec<usize>,
    pub aggregation: Aggregation,
    pub dmm_agg: DmmAgg,
    pub pauc_p: f64,
    pub pauc_standardized: bool,
    pub domain_auc: DomainAucMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            frontend: Frontend::Logmel,
            sample_rate: 16_000,
            clip_seconds: 10.0,
            frame_ms: 64.0,
            shift_ms: 32.0,
            n_mels: 128,
            f_min: 0.0,
            f_max: 8000.0,
            n_mfcc: 90,
            log_floor: 1e-10,
            lpc_order: 60,
            lpc_bins: 8000,
            lpc_f_max: None,
            pooling: PoolingMode::Tmean,
            band_c: None,
            band_s: None,
            k_list: vec![1],
            aggregation: Aggregation::Average,
            dmm_agg: DmmAgg::Off,
            pauc_p: 0.1,
            pauc_standardized: true,
            domain_auc: DomainAucMode::Mixed,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_slice(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key=value` overrides in order, then validates the result.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, assignments: &[S]) -> Result<()> {
        let mut next = self.clone();
        for a in assignments {
            next.apply_override(a.as_ref())?;
        }
        next.validate()?;
        *self = next;
        Ok(())
    }

    /// Applies one `key=value` override without validating. The value is
    /// parsed as JSON and falls back to a bare string, so `frontend=mfcc` and
    /// `k_list=[1,2]` both work.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        let key = key.trim();
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let obj = doc.as_object_mut().expect("config is an object");
        if !obj.contains_key(key) {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
        let value = serde_json::from_str(raw.trim())
            .unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
        obj.insert(key.to_string(), value);
        *self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("override '{assignment}': {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.sample_rate == 0 || !(self.clip_seconds > 0.0) {
            return fail("sample_rate and clip_seconds must be positive".into());
        }
        if !(self.frame_ms > 0.0 && self.shift_ms > 0.0) {
            return fail("frame_ms and shift_ms must be positive".into());
        }
        if self.n_mels == 0 || self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return fail("need 1 <= n_mfcc <= n_mels".into());
        }
        if !(self.f_min >= 0.0 && self.f_min < self.f_max) {
            return fail("need 0 <= f_min < f_max".into());
        }
        if self.lpc_order == 0 || self.lpc_bins < 2 {
            return fail("need lpc_order >= 1 and lpc_bins >= 2".into());
        }
        if let Some(fm) = self.lpc_f_max {
            if !(fm > 0.0 && fm <= self.sample_rate as f64 / 2.0) {
                return fail("lpc_f_max must lie in (0, Nyquist]".into());
            }
        }
        if self.band_c == Some(0) || self.band_s == Some(0) {
            return fail("band window and stride must be >= 1".into());
        }
        if self.k_list.is_empty() {
            return fail("k_list must not be empty (use [0] for unnormalized band distances)".into());
        }
        if !(self.pauc_p > 0.0 && self.pauc_p <= 1.0) {
            return fail(format!("pauc_p must lie in (0, 1], got {}", self.pauc_p));
        }
        if self.dmm_agg != DmmAgg::Off && self.pooling != PoolingMode::Both {
            return fail("DMM fusion needs pooling = both".into());
        }
        if self.frontend == Frontend::LpcSpectrum && self.dmm_agg != DmmAgg::Off {
            return fail("LPC spectra have a single direct view; DMM does not apply".into());
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        (self.frame_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn frame_shift(&self) -> usize {
        ((self.shift_ms * self.sample_rate as f64 / 1000.0).round() as usize).max(1)
    }

    pub fn lpc_f_max(&self) -> f64 {
        self.lpc_f_max.unwrap_or(self.sample_rate as f64 / 2.0)
    }

    /// Views produced by the configured frontend.
    pub fn views(&self) -> Vec<Pooling> {
        if self.frontend == Frontend::LpcSpectrum {
            return vec![Pooling::Direct];
        }
        match self.pooling {
            PoolingMode::Tmean => vec![Pooling::Tmean],
            PoolingMode::Tmax => vec![Pooling::Tmax],
            PoolingMode::Both => vec![Pooling::Tmean, Pooling::Tmax],
        }
    }

    /// Band window and stride, falling back to the per-frontend defaults
    /// (Log-Mel 38, MFCC 20, LPC spectrum 3200, embeddings 768).
    pub fn band(&self) -> (usize, usize) {
        let c = self.band_c.unwrap_or(match self.frontend {
            Frontend::Logmel => 38,
            Frontend::Mfcc => 20,
            Frontend::LpcSpectrum => 3200,
            Frontend::Embedding => 768,
        });
        (c, self.band_s.unwrap_or(c))
    }

    /// Hash of the settings that determine feature values. Banks record it so
    /// that scoring against features from a different frontend is flagged.
    pub fn frontend_hash(&self) -> String {
        let key = serde_json::json!({
            "frontend": self.frontend,
            "sample_rate": self.sample_rate,
            "clip_seconds": self.clip_seconds,
            "frame_ms": self.frame_ms,
            "shift_ms": self.shift_ms,
            "n_mels": self.n_mels,
            "f_min": self.f_min,
            "f_max": self.f_max,
            "n_mfcc": self.n_mfcc,
            "log_floor": self.log_floor,
            "lpc_order": self.lpc_order,
            "lpc_bins": self.lpc_bins,
            "lpc_f_max": self.lpc_f_max(),
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
