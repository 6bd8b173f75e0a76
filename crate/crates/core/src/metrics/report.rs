use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{auc, hmean, mean, official_2020, pauc};
use crate::dataio::{ClipRecord, DomainAucMode};
use crate::error::{Error, Result};
use crate::scoring::{ScoreColumn, ScoreRow};
use crate::types::{Domain, Label, Pooling, Split};

/// Picks one anomaly score per clip out of a score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSelector {
    pub column: ScoreColumn,
    /// Ignored for `S_dmm`, which is shared by the view rows of a clip.
    pub view: Option<Pooling>,
    pub k: Option<usize>,
}

impl ScoreSelector {
    /// `S_dmm` when present, else `S_norm_sub` of the first row's view and K.
    pub fn default_for(rows: &[ScoreRow]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("score table"))?;
        if rows.iter().any(|r| r.s_dmm.is_some()) {
            return Ok(ScoreSelector {
                column: ScoreColumn::Dmm,
                view: None,
                k: Some(first.k),
            });
        }
        Ok(ScoreSelector {
            column: ScoreColumn::NormSub,
            view: Some(first.view),
            k: Some(first.k),
        })
    }
}

pub fn select_scores(rows: &[ScoreRow], sel: &ScoreSelector) -> Result<Vec<(String, f64)>> {
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        if sel.column != ScoreColumn::Dmm && sel.view.is_some_and(|v| v != r.view) {
            continue;
        }
        if sel.k.is_some_and(|k| k != r.k) {
            continue;
        }
        let Some(v) = sel.column.get(r) else {
            return Err(Error::invalid(format!("clip {} has no {} value", r.clip_id, sel.column)));
        };
        match seen.get(r.clip_id.as_str()) {
            Some(&idx) if out[idx].1.to_bits() == v.to_bits() => {}
            Some(_) => {
                return Err(Error::invalid(format!(
                    "clip {} has several {} rows; select a view and K",
                    r.clip_id, sel.column
                )))
            }
            None => {
                seen.insert(&r.clip_id, out.len());
                out.push((r.clip_id.clone(), v));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("score selection"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub clip_id: String,
    pub score: f64,
    pub label: Label,
    pub machine_type: String,
    pub section: String,
    pub domain: Domain,
    pub regime: Option<String>,
}

/// Test-split scores joined with their manifest labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<TableRow>,
}

impl ScoreTable {
    /// Joins by clip id. Every scored clip must appear in the manifest;
    /// training clips are dropped.
    pub fn join(scores: &[(String, f64)], manifest: &[ClipRecord]) -> Result<Self> {
        let by_id: HashMap<&str, &ClipRecord> = manifest.iter().map(|r| (r.clip_id.as_str(), r)).collect();
        let mut rows = Vec::with_capacity(scores.len());
        for (id, score) in scores {
            let rec = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::invalid(format!("scored clip '{id}' is not in the manifest")))?;
            if !score.is_finite() {
                return Err(Error::invalid(format!("clip '{id}' has a non-finite score")));
            }
            if rec.split != Split::Test {
                continue;
            }
            rows.push(TableRow {
                clip_id: id.clone(),
                score: *score,
                label: rec.label,
                machine_type: rec.machine_type.clone(),
                section: rec.section.clone(),
                domain: rec.domain,
                regime: rec.regime.clone(),
            });
        }
        Ok(ScoreTable { rows })
    }

    pub fn scores(&self, label: Label) -> Vec<f64> {
        self.rows.iter().filter(|r| r.label == label).map(|r| r.score).collect()
    }

    /// Rows grouped by `(machine_type, section)` in sorted order.
    pub fn sections(&self) -> BTreeMap<(String, String), Vec<&TableRow>> {
        let mut m: BTreeMap<(String, String), Vec<&TableRow>> = BTreeMap::new();
        for r in &self.rows {
            m.entry((r.machine_type.clone(), r.section.clone())).or_default().push(r);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionReport {
    pub machine_type: String,
    pub section: String,
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub auc: f64,
    /// Over all domains of the section.
    pub pauc: f64,
    pub source_auc: Option<f64>,
    pub target_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineReport {
    pub machine_type: String,
    pub auc: f64,
    pub pauc: f64,
    /// `½(mean AUC + mean pAUC)` over the sections.
    pub official_2020: f64,
    /// Harmonic mean of the section AUCs and pAUCs.
    pub harmonic: f64,
    /// Harmonic mean of the source AUCs, target AUCs and pAUCs of the sections.
    pub official_dg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub score_column: Option<String>,
    pub pauc_p: f64,
    pub pauc_standardized: bool,
    pub domain_auc: DomainAucMode,
    pub sections: Vec<SectionReport>,
    pub machines: Vec<MachineReport>,
    /// Arithmetic mean of the per-type `official_2020` values.
    pub official_2020: f64,
    /// Harmonic mean of the per-type `harmonic` values.
    pub harmonic: f64,
    /// Harmonic mean of the per-type DG values; `None` without domain labels.
    pub official_dg: Option<f64>,
}

/// One line of the flat CSV form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub level: String,
    pub machine_type: String,
    pub section: String,
    pub auc: Option<f64>,
    pub pauc: Option<f64>,
    pub source_auc: Option<f64>,
    pub target_auc: Option<f64>,
    pub official_2020: Option<f64>,
    pub harmonic: Option<f64>,
    pub official_dg: Option<f64>,
}

fn domain_auc(rows: &[&TableRow], domain: Domain, mode: DomainAucMode) -> Option<f64> {
    let normal: Vec<f64> = rows
        .iter()
        .filter(|r| r.label == Label::Normal && r.domain == domain)
        .map(|r| r.score)
        .collect();
    let anomalous: Vec<f64> = rows
        .iter()
        .filter(|r| r.label == Label::Anomalous && (mode == DomainAucMode::Mixed || r.domain == domain))
        .map(|r| r.score)
        .collect();
    auc(&normal, &anomalous).ok()
}

impl EvalReport {
    pub fn compute(table: &ScoreTable, p: f64, standardized: bool, mode: DomainAucMode) -> Result<Self> {
        let groups = table.sections();
        if groups.is_empty() {
            return Err(Error::Empty("test clips"));
        }
        let mut sections = Vec::with_capacity(groups.len());
        for ((mt, sec), rows) in &groups {
            let normal: Vec<f64> = rows.iter().filter(|r| r.label == Label::Normal).map(|r| r.score).collect();
            let anomalous: Vec<f64> = rows.iter().filter(|r| r.label == Label::Anomalous).map(|r| r.score).collect();
            sections.push(SectionReport {
                machine_type: mt.clone(),
                section: sec.clone(),
                n_normal: normal.len(),
                n_anomalous: anomalous.len(),
                auc: auc(&normal, &anomalous)?,
                pauc: pauc(&normal, &anomalous, p, standardized)?,
                source_auc: domain_auc(rows, Domain::Source, mode),
                target_auc: domain_auc(rows, Domain::Target, mode),
            });
        }

        let mut by_type: BTreeMap<&str, Vec<&SectionReport>> = BTreeMap::new();
        for s in &sections {
            by_type.entry(&s.machine_type).or_default().push(s);
        }
        let mut machines = Vec::with_capacity(by_type.len());
        let mut pairs = Vec::with_capacity(by_type.len());
        for (mt, secs) in &by_type {
            let pair: Vec<(f64, f64)> = secs.iter().map(|s| (s.auc, s.pauc)).collect();
            let flat: Vec<f64> = pair.iter().flat_map(|&(a, b)| [a, b]).collect();
            let dg: Option<Vec<f64>> = secs
                .iter()
                .map(|s| Some([s.source_auc?, s.target_auc?, s.pauc]))
                .collect::<Option<Vec<_>>>()
                .map(|v| v.concat());
            machines.push(MachineReport {
                machine_type: mt.to_string(),
                auc: mean(&pair.iter().map(|x| x.0).collect::<Vec<_>>()),
                pauc: mean(&pair.iter().map(|x| x.1).collect::<Vec<_>>()),
                official_2020: official_2020(std::slice::from_ref(&pair))?,
                harmonic: hmean(&flat),
                official_dg: dg.map(|v| hmean(&v)),
            });
            pairs.push(pair);
        }
        let official_dg = machines
            .iter()
            .map(|m| m.official_dg)
            .collect::<Option<Vec<f64>>>()
            .map(|v| {
                if v.contains(&0.0) {
                    log::warn!("a zero metric makes the harmonic official score 0");
                }
                hmean(&v)
            });
        Ok(EvalReport {
            score_column: None,
            pauc_p: p,
            pauc_standardized: standardized,
            domain_auc: mode,
            official_2020: official_2020(&pairs)?,
            harmonic: hmean(&machines.iter().map(|m| m.harmonic).collect::<Vec<_>>()),
            official_dg,
            sections,
            machines,
        })
    }

    pub fn flat_rows(&self) -> Vec<EvalRow> {
        let mut out = Vec::new();
        for s in &self.sections {
            out.push(EvalRow {
                level: "section".into(),
                machine_type: s.machine_type.clone(),
                section: s.section.clone(),
                auc: Some(s.auc),
                pauc: Some(s.pauc),
                source_auc: s.source_auc,
                target_auc: s.target_auc,
                official_2020: None,
                harmonic: None,
                official_dg: None,
            });
        }
        for m in &self.machines {
            out.push(EvalRow {
                level: "machine_type".into(),
                machine_type: m.machine_type.clone(),
                section: String::new(),
                auc: Some(m.auc),
                pauc: Some(m.pauc),
                source_auc: None,
                target_auc: None,
                official_2020: Some(m.official_2020),
                harmonic: Some(m.harmonic),
                official_dg: m.official_dg,
            });
        }
        out.push(EvalRow {
            level: "dataset".into(),
            machine_type: String::new(),
            section: String::new(),
            auc: None,
            pauc: None,
            source_auc: None,
            target_auc: None,
            official_2020: Some(self.official_2020),
            harmonic: Some(self.harmonic),
            official_dg: self.official_dg,
        });
        out
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let fmt = |e: csv::Error| Error::Format {
            what: "eval csv",
            msg: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(fmt)?;
        for r in self.flat_rows() {
            w.serialize(r).map_err(fmt)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
