//! Score CSV: `clip_id,view,S_glob,S_uni,S_sub,P,B,K,S_norm_sub,S_dmm`, one
//! row per (clip, view, K). `S_dmm` is empty when fusion is off. A sidecar
//! `<path>.json` echoes the configuration that produced the scores.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::types::Pooling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub clip_id: String,
    pub view: Pooling,
    #[serde(rename = "S_glob")]
    pub s_glob: f64,
    #[serde(rename = "S_uni")]
    pub s_uni: f64,
    #[serde(rename = "S_sub")]
    pub s_sub: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S_norm_sub")]
    pub s_norm_sub: f64,
    #[serde(rename = "S_dmm")]
    pub s_dmm: Option<f64>,
}

/// Which score of a row is used as the anomaly score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreColumn {
    #[serde(rename = "S_glob")]
    Glob,
    #[serde(rename = "S_uni")]
    Uni,
    #[serde(rename = "S_sub")]
    Sub,
    #[serde(rename = "S_norm_sub")]
    NormSub,
    #[serde(rename = "S_dmm")]
    Dmm,
}

impl ScoreColumn {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreColumn::Glob => "S_glob",
            ScoreColumn::Uni => "S_uni",
            ScoreColumn::Sub => "S_sub",
            ScoreColumn::NormSub => "S_norm_sub",
            ScoreColumn::Dmm => "S_dmm",
        }
    }

    pub fn get(self, row: &ScoreRow) -> Option<f64> {
        match self {
            ScoreColumn::Glob => Some(row.s_glob),
            ScoreColumn::Uni => Some(row.s_uni),
            ScoreColumn::Sub => Some(row.s_sub),
            ScoreColumn::NormSub => Some(row.s_norm_sub),
            ScoreColumn::Dmm => row.s_dmm,
        }
    }
}

impl std::fmt::Display for ScoreColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "s_glob" | "glob" => ScoreColumn::Glob,
            "s_uni" | "uni" => ScoreColumn::Uni,
            "s_sub" | "sub" => ScoreColumn::Sub,
            "s_norm_sub" | "norm_sub" | "ldn" => ScoreColumn::NormSub,
            "s_dmm" | "dmm" => ScoreColumn::Dmm,
            other => return Err(Error::invalid(format!("unknown score column '{other}'"))),
        })
    }
}

pub fn config_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the rows and, when given, the config echo sidecar.
pub fn write_scores(path: impl AsRef<Path>, rows: &[ScoreRow], config_echo: Option<&serde_json::Value>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    if let Some(echo) = config_echo {
        let side = config_sidecar(path);
        let text = serde_json::to_string_pretty(echo).expect("json value serializes");
        std::fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
    }
    Ok(())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    for (n, rec) in r.deserialize::<ScoreRow>().enumerate() {
        let row = rec.map_err(|e| Error::Format {
            what: "score table",
            msg: format!("{} row {}: {e}", path.display(), n + 2),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        what: "score table",
        msg: format!("{}: {e}", path.display()),
    }
}
