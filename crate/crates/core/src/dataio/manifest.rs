//! Dataset manifests.
//!
//! A manifest is a CSV file with the fixed header
//! `clip_id,path,label,split,machine_type,section,domain,regime`; the last
//! two columns are optional and unknown columns are ignored.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::types::{Domain, Label, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    pub path: PathBuf,
    pub label: Label,
    pub split: Split,
    pub machine_type: String,
    pub section: String,
    pub domain: Domain,
    pub regime: Option<String>,
}

impl ClipRecord {
    /// Resolves `path` against the directory holding the manifest.
    pub fn resolve(&self, manifest_dir: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            manifest_dir.join(&self.path)
        }
    }
}

const REQUIRED: [&str; 6] = ["clip_id", "path", "label", "split", "machine_type", "section"];

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ClipRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest(file)
}

pub fn read_manifest<R: std::io::Read>(reader: R) -> Result<Vec<ClipRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Manifest {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| Error::Manifest {
            line: 1,
            msg: format!("missing column '{name}'"),
        })?;
    }
    let domain_col = col("domain");
    let regime_col = col("regime");

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Manifest {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| Error::Manifest { line, msg };
        let field = |i: usize| -> Result<&str> {
            row.get(i)
                .ok_or_else(|| bad(format!("missing field {}", headers.get(i).unwrap_or("?"))))
        };

        let clip_id = field(idx[0])?.to_string();
        if clip_id.is_empty() {
            return Err(bad("empty clip_id".into()));
        }
        let label: Label = field(idx[2])?.parse().map_err(|e: Error| bad(e.to_string()))?;
        let split: Split = field(idx[3])?.parse().map_err(|e: Error| bad(e.to_string()))?;
        let domain = match domain_col.and_then(|i| row.get(i)) {
            Some(s) => s.parse().map_err(|e: Error| bad(e.to_string()))?,
            None => Domain::None,
        };
        let regime = regime_col
            .and_then(|i| row.get(i))
            .filter(|s| !s.is_empty())
            .map(str::to_string);

        if split == Split::Train && label == Label::Anomalous {
            return Err(bad("anomalous clip in train split".into()));
        }
        if !seen.insert(clip_id.clone()) {
            return Err(bad(format!("duplicate clip_id '{clip_id}'")));
        }
        out.push(ClipRecord {
            clip_id,
            path: PathBuf::from(field(idx[1])?),
            label,
            split,
            machine_type: field(idx[4])?.to_string(),
            section: field(idx[5])?.to_string(),
            domain,
            regime,
        });
    }

    let has_none = out.iter().any(|r| r.domain == Domain::None);
    if has_none {
        if let Some(pos) = out.iter().position(|r| r.domain != Domain::None) {
            return Err(Error::Manifest {
                line: pos as u64 + 2,
                msg: "domain 'none' mixed with source/target domains".into(),
            });
        }
    }
    Ok(out)
}

pub fn write_manifest<W: std::io::Write>(writer: W, records: &[ClipRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Format {
        what: "manifest",
        msg: e.to_string(),
    };
    w.write_record([
        "clip_id",
        "path",
        "label",
        "split",
        "machine_type",
        "section",
        "domain",
        "regime",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.clip_id.as_str(),
            &r.path.to_string_lossy(),
            r.label.as_str(),
            r.split.as_str(),
            &r.machine_type,
            &r.section,
            r.domain.as_str(),
            r.regime.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<manifest>", e))
}

pub fn save_manifest(path: impl AsRef<Path>, records: &[ClipRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_manifest(std::io::BufWriter::new(file), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<ClipRecord>> {
        read_manifest(s.as_bytes())
    }

    #[test]
    fn parses_four_rows() {
        let recs = parse(
            "clip_id,path,label,split,machine_type,section,domain,regime\n\
             a,a.wav,normal,train,fan,00,source,\n\
             b,b.wav,normal,train,fan,00,target,\n\
             c,c.wav,normal,test,fan,00,source,\n\
             d,d.wav,anomalous,test,fan,00,target,\n",
        )
        .unwrap();
        assert_eq!(recs.len(), 4);
        let ids: HashSet<_> = recs.iter().map(|r| r.clip_id.as_str()).collect();
        assert_eq!(ids.len(), 4);
        assert_eq!(recs[3].label, Label::Anomalous);
        assert_eq!(recs[0].clip_id, "a");
    }

    #[test]
    fn rejects_anomaly_in_train() {
        let err = parse(
            "clip_id,path,label,split,machine_type,section\n\
             a,a.wav,normal,train,fan,00\n\
             b,b.wav,anomaly,train,fan,00\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("anomalous clip in train split"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn optional_regime_defaults_to_none() {
        let recs = parse(
            "clip_id,path,label,split,machine_type,section,domain\n\
             a,a.wav,normal,train,fan,00,source\n\
             b,b.wav,normal,test,fan,00,target\n",
        )
        .unwrap();
        assert_eq!(recs[0].domain, Domain::Source);
        assert_eq!(recs[1].domain, Domain::Target);
        assert!(recs.iter().all(|r| r.regime.is_none()));
    }

    #[test]
    fn duplicate_ids_and_bad_labels() {
        let dup = parse(
            "clip_id,path,label,split,machine_type,section\n\
             a,a.wav,normal,train,fan,00\n\
             a,b.wav,normal,test,fan,00\n",
        );
        assert!(dup.unwrap_err().to_string().contains("duplicate"));
        let bad = parse("clip_id,path,label,split,machine_type,section\na,a.wav,weird,test,fan,00\n");
        assert!(bad.unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn unknown_columns_ignored_and_none_mixing_rejected() {
        let recs = parse(
            "extra,clip_id,path,label,split,machine_type,section\n\
             x,a,a.wav,normal,train,fan,00\n",
        )
        .unwrap();
        assert_eq!(recs[0].domain, Domain::None);
        let mixed = parse(
            "clip_id,path,label,split,machine_type,section,domain\n\
             a,a.wav,normal,train,fan,00,none\n\
             b,b.wav,normal,test,fan,00,source\n",
        );
        assert!(mixed.is_err());
    }

    #[test]
    fn round_trip() {
        let recs = parse(
            "clip_id,path,label,split,machine_type,section,domain,regime\n\
             a,dir/a.wav,normal,train,fan,00,source,low\n\
             b,b.wav,anomalous,test,pump,01,target,\n",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_manifest(&mut buf, &recs).unwrap();
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), recs);
    }
}
