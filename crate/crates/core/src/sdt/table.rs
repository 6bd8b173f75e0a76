//! CSV outputs of the band-size and K sweeps.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::sweep::{BandSizePoint, KSweepPoint};
use super::{AveragedRatios, SdtReport};
use crate::error::{Error, Result};
use crate::types::Pooling;

/// One row per (band size, view), averaged across machine types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub band_size: usize,
    pub view: Pooling,
    #[serde(rename = "Var(Sub)/Var(Uni)")]
    pub ratio_sub_uni: f64,
    #[serde(rename = "Var(Uni)/Var(Glob)")]
    pub ratio_uni_glob: f64,
    #[serde(rename = "Var(Sub)/Var(Glob)")]
    pub ratio_sub_glob: f64,
    #[serde(rename = "Δμ_Glob")]
    pub delta_glob: f64,
    #[serde(rename = "Δμ_Sub")]
    pub delta_sub: f64,
    #[serde(rename = "d'_Glob")]
    pub dprime_glob: f64,
    #[serde(rename = "d'_Sub")]
    pub dprime_sub: f64,
    pub condition: bool,
}

impl SummaryRow {
    pub fn from_averages(band_size: usize, view: Pooling, a: &AveragedRatios) -> Self {
        SummaryRow {
            band_size,
            view,
            ratio_sub_uni: a.ratio_sub_uni,
            ratio_uni_glob: a.ratio_uni_glob,
            ratio_sub_glob: a.ratio_sub_glob,
            delta_glob: a.delta_glob,
            delta_sub: a.delta_sub,
            dprime_glob: a.dprime_glob,
            dprime_sub: a.dprime_sub,
            condition: a.condition,
        }
    }

    pub fn from_report(band_size: usize, view: Pooling, r: &SdtReport) -> Self {
        SummaryRow {
            band_size,
            view,
            ratio_sub_uni: r.ratio_sub_uni,
            ratio_uni_glob: r.ratio_uni_glob,
            ratio_sub_glob: r.ratio_sub_glob,
            delta_glob: r.delta_glob,
            delta_sub: r.delta_sub,
            dprime_glob: r.dprime_glob,
            dprime_sub: r.dprime_sub,
            condition: r.condition,
        }
    }

    /// Rows of a sweep, averaging the per-machine moments before forming
    /// ratios.
    pub fn from_points(points: &[BandSizePoint]) -> Vec<Self> {
        points
            .iter()
            .flat_map(|p| {
                p.views
                    .iter()
                    .map(|v| SummaryRow::from_averages(p.band_size, v.view, &v.averages.moments_then_ratio))
            })
            .collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format {
        what: "report csv",
        msg: e.to_string(),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary(path: impl AsRef<Path>, points: &[BandSizePoint]) -> Result<()> {
    write_rows(path.as_ref(), SummaryRow::from_points(points))
}

pub fn write_summary_rows(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path.as_ref(), rows)
}

pub fn write_summary_per_machine(path: impl AsRef<Path>, points: &[BandSizePoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "machine_type",
        "band_size",
        "view",
        "Var(Sub)/Var(Uni)",
        "Var(Uni)/Var(Glob)",
        "Var(Sub)/Var(Glob)",
        "Δμ_Glob",
        "Δμ_Sub",
        "d'_Glob",
        "d'_Sub",
        "condition",
    ])
    .map_err(csv_err)?;
    for p in points {
        for v in &p.views {
            for (mt, r) in &v.per_machine {
                let t = SummaryRow::from_report(p.band_size, v.view, r);
                w.write_record([
                    mt.clone(),
                    t.band_size.to_string(),
                    t.view.to_string(),
                    t.ratio_sub_uni.to_string(),
                    t.ratio_uni_glob.to_string(),
                    t.ratio_sub_glob.to_string(),
                    t.delta_glob.to_string(),
                    t.delta_sub.to_string(),
                    t.dprime_glob.to_string(),
                    t.dprime_sub.to_string(),
                    t.condition.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Long-format plot data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    /// `variance` / `dprime` for the band-size diagnostics, `band_size` and
    /// `k` for the official-score curves.
    pub figure: String,
    pub band_size: Option<usize>,
    pub view: String,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    /// Machine type, or `all` for the across-type average.
    pub machine_type: String,
    pub metric: String,
    pub value: f64,
}

impl PlotRow {
    fn new(figure: &str, band_size: Option<usize>, view: &str, k: Option<usize>, mt: &str, metric: &str, value: f64) -> Self {
        PlotRow {
            figure: figure.into(),
            band_size,
            view: view.into(),
            k,
            machine_type: mt.into(),
            metric: metric.into(),
            value,
        }
    }

    pub fn from_band_points(points: &[BandSizePoint]) -> Vec<Self> {
        let mut out = Vec::new();
        for p in points {
            let c = Some(p.band_size);
            for v in &p.views {
                let view = v.view.to_string();
                for (form, a) in [
                    ("moments_then_ratio", &v.averages.moments_then_ratio),
                    ("ratios_then_mean", &v.averages.ratios_then_mean),
                ] {
                    out.push(PlotRow::new("variance", c, &view, None, "all", &format!("ratio_sub_glob.{form}"), a.ratio_sub_glob));
                    out.push(PlotRow::new("dprime", c, &view, None, "all", &format!("dprime_ratio.{form}"), a.dprime_ratio));
                }
                for (mt, r) in &v.per_machine {
                    out.push(PlotRow::new("variance", c, &view, None, mt, "ratio_sub_glob", r.ratio_sub_glob));
                    out.push(PlotRow::new("dprime", c, &view, None, mt, "dprime_ratio", r.dprime_ratio));
                    if let Some(l) = r.dprime_ldn {
                        out.push(PlotRow::new("dprime", c, &view, None, mt, "dprime_ldn_ratio", l / r.dprime_glob));
                    }
                }
            }
            for (name, e) in &p.evals {
                out.push(PlotRow::new("band_size", c, name, None, "all", "official_2020", e.official_2020));
                if let Some(dg) = e.official_dg {
                    out.push(PlotRow::new("band_size", c, name, None, "all", "official_dg", dg));
                }
            }
        }
        out
    }

    pub fn from_k_points(points: &[KSweepPoint]) -> Vec<Self> {
        let mut out = Vec::new();
        for p in points {
            let k = Some(p.k);
            out.push(PlotRow::new("k", None, &p.variant, k, "all", "official_2020", p.eval.official_2020));
            if let Some(dg) = p.eval.official_dg {
                out.push(PlotRow::new("k", None, &p.variant, k, "all", "official_dg", dg));
            }
            for m in &p.eval.machines {
                out.push(PlotRow::new("k", None, &p.variant, k, &m.machine_type, "official_2020", m.official_2020));
            }
        }
        out
    }
}

pub fn write_plot_csv(path: impl AsRef<Path>, rows: &[PlotRow]) -> Result<()> {
    write_rows(path.as_ref(), rows)
}
