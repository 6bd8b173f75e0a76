//! Value types shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};

/// Meaning of the ordered coordinate axis of a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    MelBand,
    CepstralCoeff,
    LpcBin,
    EmbeddingBand,
}

/// How a clip vector was obtained from its frame sequence. Each pooling is a
/// scoring "view": AdaBEAM scores the `Tmean` and `Tmax` views separately and
/// fuses the results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Tmean,
    Tmax,
    Direct,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Tmean => "tmean",
            Pooling::Tmax => "tmax",
            Pooling::Direct => "direct",
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pooling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tmean" => Ok(Pooling::Tmean),
            "tmax" => Ok(Pooling::Tmax),
            "direct" => Ok(Pooling::Direct),
            other => Err(Error::invalid(format!("unknown view '{other}'"))),
        }
    }
}

/// Clip-level feature vector with an ordered band axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipVector {
    pub values: Vec<f64>,
    pub axis: AxisKind,
    pub pooling: Pooling,
}

impl ClipVector {
    pub fn new(values: Vec<f64>, axis: AxisKind, pooling: Pooling) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("clip vector"));
        }
        ensure_finite(&values)?;
        if pooling == Pooling::Direct && axis != AxisKind::LpcBin {
            return Err(Error::invalid("direct pooling is only defined for LPC spectra"));
        }
        Ok(ClipVector {
            values,
            axis,
            pooling,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        }
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Label::Normal),
            "anomalous" | "anomaly" | "abnormal" => Ok(Label::Anomalous),
            other => Err(Error::invalid(format!("unknown label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Source,
    Target,
    None,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
            Domain::None => "none",
        }
    }
}

impl FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "source" => Ok(Domain::Source),
            "target" => Ok(Domain::Target),
            "none" | "" => Ok(Domain::None),
            other => Err(Error::invalid(format!("unknown domain '{other}'"))),
        }
    }
}
