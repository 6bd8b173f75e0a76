//! Band-size and neighbourhood-size sweeps over a fixed feature set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

use super::{average_reports, sdt_report, MachineAverages, SdtReport, SdtSample};
use crate::band_memory::{make_band_spec, MemoryBank};
use crate::dataio::{Aggregation, ClipRecord, DmmAgg, DomainAucMode, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{EvalReport, ScoreTable};
use crate::scoring::{dmm_fuse, match_query, Fusion, QueryMatch, ScoreOptions, ScoreRow, ViewScores};
use crate::types::{ClipVector, Domain, Label, Pooling, Split};

/// Reference and test vectors of one view. `tests[i]` belongs to
/// `SweepInput::tests[i]`.
#[derive(Debug, Clone)]
pub struct ViewFeatures {
    pub view: Pooling,
    pub refs: Vec<ClipVector>,
    pub tests: Vec<ClipVector>,
}

#[derive(Debug, Clone)]
pub struct SweepInput {
    pub tests: Vec<ClipRecord>,
    pub views: Vec<ViewFeatures>,
    pub config_hash: String,
}

impl SweepInput {
    fn feature_len(&self) -> Result<usize> {
        let v = self.views.first().ok_or(Error::Empty("feature views"))?;
        let r = v.refs.first().ok_or(Error::Empty("reference set"))?;
        for v in &self.views {
            if v.tests.len() != self.tests.len() {
                return Err(Error::LengthMismatch {
                    expected: self.tests.len(),
                    found: v.tests.len(),
                });
            }
        }
        Ok(r.len())
    }

    fn view(&self, p: Pooling) -> Option<&ViewFeatures> {
        self.views.iter().find(|v| v.view == p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub band: (usize, usize),
    pub k_list: Vec<usize>,
    pub aggregation: Aggregation,
    pub dmm: DmmAgg,
    pub pauc_p: f64,
    pub pauc_standardized: bool,
    pub domain_auc: DomainAucMode,
    /// `None` uses regimes when every normal test clip has one.
    pub use_regimes: Option<bool>,
}

impl SweepOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        SweepOptions {
            band: cfg.band(),
            k_list: cfg.k_list.clone(),
            aggregation: cfg.aggregation,
            dmm: cfg.dmm_agg,
            pauc_p: cfg.pauc_p,
            pauc_standardized: cfg.pauc_standardized,
            domain_auc: cfg.domain_auc,
            use_regimes: None,
        }
    }

    fn eval(&self, scores: &[(String, f64)], tests: &[ClipRecord]) -> Result<EvalReport> {
        let table = ScoreTable::join(scores, tests)?;
        EvalReport::compute(&table, self.pauc_p, self.pauc_standardized, self.domain_auc)
    }
}

/// Regime label of a clip: the manifest regime, falling back to its domain.
pub fn regime_of(rec: &ClipRecord) -> Option<String> {
    rec.regime
        .clone()
        .or_else(|| (rec.domain != Domain::None).then(|| rec.domain.as_str().to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewDiagnostics {
    pub view: Pooling,
    pub pooled: SdtReport,
    pub per_machine: Vec<(String, SdtReport)>,
    pub averages: MachineAverages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSizePoint {
    pub band_size: usize,
    pub n_bands: usize,
    pub views: Vec<ViewDiagnostics>,
    /// Official scores of each view's primary score and of DMM when enabled.
    pub evals: Vec<(String, EvalReport)>,
}

fn build_bank(refs: &[ClipVector], c: usize, s: usize, ks: &[usize], hash: &str) -> Result<MemoryBank> {
    let f = refs.first().ok_or(Error::Empty("reference set"))?.len();
    MemoryBank::build(refs, make_band_spec(f, c, s)?, ks, hash)
}

fn match_all(tests: &[ClipVector], bank: &MemoryBank) -> Result<Vec<QueryMatch>> {
    tests.par_iter().map(|t| match_query(t.as_slice(), bank)).collect()
}

/// Diagnostics of one view from its per-clip scores; `scores[i]` belongs to
/// `tests[i]`.
pub fn diagnose_view(view: Pooling, scores: &[ViewScores], tests: &[ClipRecord], use_regimes: Option<bool>) -> Result<ViewDiagnostics> {
    let samples = tests
        .iter()
        .zip(scores)
        .map(|(r, v)| (r, v.s_glob, v.s_uni, v.s_sub, v.normalized.first().map(|x| x.1), Some(v.rho)))
        .collect();
    diagnose_samples(view, samples, use_regimes)
}

/// Diagnostics from a score table. Rows of the lowest K of each view supply
/// the LDN score; clips are matched to the manifest by id.
pub fn diagnose_score_rows(rows: &[ScoreRow], manifest: &[ClipRecord], use_regimes: Option<bool>) -> Result<Vec<ViewDiagnostics>> {
    let by_id: HashMap<&str, &ClipRecord> = manifest.iter().map(|r| (r.clip_id.as_str(), r)).collect();
    let mut views: BTreeMap<Pooling, Vec<&ScoreRow>> = BTreeMap::new();
    for r in rows {
        views.entry(r.view).or_default().push(r);
    }
    let mut out = Vec::new();
    for (view, vrows) in views {
        let k = vrows.iter().map(|r| r.k).min().expect("non-empty group");
        let samples = vrows
            .iter()
            .filter(|r| r.k == k)
            .map(|r| {
                let rec = by_id
                    .get(r.clip_id.as_str())
                    .ok_or_else(|| Error::invalid(format!("scored clip '{}' is not in the manifest", r.clip_id)))?;
                Ok((*rec, r.s_glob, r.s_uni, r.s_sub, Some(r.s_norm_sub), None))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(diagnose_samples(view, samples, use_regimes)?);
    }
    if out.is_empty() {
        return Err(Error::Empty("score table"));
    }
    Ok(out)
}

type RawSample<'a> = (&'a ClipRecord, f64, f64, f64, Option<f64>, Option<f64>);

fn diagnose_samples(view: Pooling, raw: Vec<RawSample<'_>>, use_regimes: Option<bool>) -> Result<ViewDiagnostics> {
    let samples: Vec<(&ClipRecord, SdtSample)> = raw
        .into_iter()
        .filter(|(r, ..)| r.split == Split::Test)
        .map(|(r, g, u, s, ldn, rho)| {
            (
                r,
                SdtSample {
                    s_glob: g,
                    s_uni: u,
                    s_sub: s,
                    s_ldn: ldn,
                    label: r.label,
                    regime: regime_of(r),
                    rho,
                },
            )
        })
        .collect();
    let regimes_for = |group: &[SdtSample]| match use_regimes {
        Some(b) => b,
        None => group.iter().filter(|s| s.label == Label::Normal).all(|s| s.regime.is_some()),
    };
    let all: Vec<SdtSample> = samples.iter().map(|(_, s)| s.clone()).collect();
    let pooled = sdt_report(&all, regimes_for(&all))?;
    let mut by_type: BTreeMap<&str, Vec<SdtSample>> = BTreeMap::new();
    for (r, s) in &samples {
        by_type.entry(&r.machine_type).or_default().push(s.clone());
    }
    let per_machine = by_type
        .into_iter()
        .map(|(mt, v)| Ok((mt.to_string(), sdt_report(&v, regimes_for(&v))?)))
        .collect::<Result<Vec<_>>>()?;
    let averages = average_reports(&per_machine.iter().map(|(_, r)| r).collect::<Vec<_>>())?;
    Ok(ViewDiagnostics {
        view,
        pooled,
        per_machine,
        averages,
    })
}

fn primary_scores(tests: &[ClipRecord], views: &[ViewScores]) -> Vec<(String, f64)> {
    tests
        .iter()
        .zip(views)
        .map(|(r, v)| (r.clip_id.clone(), v.normalized[0].1))
        .collect()
}

/// One bank build and scoring pass per band size (stride = size).
pub fn band_size_sweep(input: &SweepInput, sizes: &[usize], opts: &SweepOptions) -> Result<Vec<BandSizePoint>> {
    let f = input.feature_len()?;
    if sizes.is_empty() {
        return Err(Error::Empty("band size list"));
    }
    if let Some(&c) = sizes.iter().find(|&&c| c == 0 || c > f) {
        return Err(Error::invalid(format!("band size {c} is outside 1..={f}")));
    }
    let score_opts = ScoreOptions {
        k_list: opts.k_list.clone(),
        aggregation: opts.aggregation,
        dmm: opts.dmm,
    };
    sizes
        .par_iter()
        .map(|&c| {
            let mut views = Vec::new();
            let mut evals = Vec::new();
            let mut per_view_scores: Vec<(Pooling, Vec<ViewScores>)> = Vec::new();
            for vf in &input.views {
                let bank = build_bank(&vf.refs, c, c, &opts.k_list, &input.config_hash)?;
                let scores = match_all(&vf.tests, &bank)?
                    .iter()
                    .map(|m| ViewScores::from_match(vf.view, m, &bank, &score_opts))
                    .collect::<Result<Vec<_>>>()?;
                views.push(diagnose_view(vf.view, &scores, &input.tests, opts.use_regimes)?);
                evals.push((vf.view.to_string(), opts.eval(&primary_scores(&input.tests, &scores), &input.tests)?));
                per_view_scores.push((vf.view, scores));
            }
            if let Some(rule) = opts.dmm.fusion() {
                let get = |p: Pooling| {
                    per_view_scores
                        .iter()
                        .find(|(v, _)| *v == p)
                        .map(|(_, s)| s)
                        .ok_or_else(|| Error::invalid(format!("DMM needs the {p} view")))
                };
                let (a, b) = (get(Pooling::Tmean)?, get(Pooling::Tmax)?);
                let fused: Vec<(String, f64)> = input
                    .tests
                    .iter()
                    .zip(a.iter().zip(b))
                    .map(|(r, (x, y))| (r.clip_id.clone(), dmm_fuse(x.normalized[0].1, y.normalized[0].1, rule)))
                    .collect();
                evals.push(("dmm".to_string(), opts.eval(&fused, &input.tests)?));
            }
            Ok(BandSizePoint {
                band_size: c,
                n_bands: make_band_spec(f, c, c)?.n_bands(),
                views,
                evals,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepPoint {
    pub k: usize,
    /// `tmean`, `tmax`, `direct`, or `dmm_mean` / `dmm_max` / `dmm_min`.
    pub variant: String,
    pub eval: EvalReport,
}

/// Official scores across neighbourhood sizes. Banks are built once with all
/// K values and the band distances of each clip are computed once; only the
/// LDN denominators change between points.
pub fn k_sweep(input: &SweepInput, k_values: &[usize], opts: &SweepOptions) -> Result<Vec<KSweepPoint>> {
    input.feature_len()?;
    if k_values.is_empty() {
        return Err(Error::Empty("K list"));
    }
    let (c, s) = opts.band;
    let mut cached: Vec<(Pooling, MemoryBank, Vec<QueryMatch>)> = Vec::new();
    for vf in &input.views {
        let bank = build_bank(&vf.refs, c, s, k_values, &input.config_hash)?;
        let matches = match_all(&vf.tests, &bank)?;
        cached.push((vf.view, bank, matches));
    }
    let has_dmm = input.view(Pooling::Tmean).is_some() && input.view(Pooling::Tmax).is_some();
    k_values
        .par_iter()
        .map(|&k| {
            let mut out = Vec::new();
            let mut per_view: Vec<(Pooling, Vec<f64>)> = Vec::new();
            for (view, bank, matches) in &cached {
                let scores = matches
                    .iter()
                    .map(|m| Ok(m.normalized(bank, k, opts.aggregation)?.score))
                    .collect::<Result<Vec<f64>>>()?;
                let named: Vec<(String, f64)> =
                    input.tests.iter().zip(&scores).map(|(r, &v)| (r.clip_id.clone(), v)).collect();
                out.push(KSweepPoint {
                    k,
                    variant: view.to_string(),
                    eval: opts.eval(&named, &input.tests)?,
                });
                per_view.push((*view, scores));
            }
            if has_dmm {
                let get = |p: Pooling| &per_view.iter().find(|(v, _)| *v == p).expect("view present").1;
                let (a, b) = (get(Pooling::Tmean), get(Pooling::Tmax));
                for (name, rule) in [("dmm_mean", Fusion::Mean), ("dmm_max", Fusion::Max), ("dmm_min", Fusion::Min)] {
                    let fused: Vec<(String, f64)> = input
                        .tests
                        .iter()
                        .zip(a.iter().zip(b))
                        .map(|(r, (&x, &y))| (r.clip_id.clone(), dmm_fuse(x, y, rule)))
                        .collect();
                    out.push(KSweepPoint {
                        k,
                        variant: name.to_string(),
                        eval: opts.eval(&fused, &input.tests)?,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<_>>>>()
        .map(|v| v.into_iter().flatten().collect())
}
