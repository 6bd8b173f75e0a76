use rayon::prelude::*;
use std::path::{Path, PathBuf};

use beamkit::band_memory::{load_bank_checked, make_band_spec, save_bank, MemoryBank};
use beamkit::cost::{bench_all, format_cost_table, CostOptions};
use beamkit::dataio::{load_manifest, save_manifest, ClipRecord, RunConfig};
use beamkit::metrics::{select_scores, EvalReport, ScoreSelector, ScoreTable};
use beamkit::pipeline::{axis_for, extract_to_cache, load_cached, write_cached};
use beamkit::scoring::{config_sidecar, read_scores, score_clip, write_scores, ScoreColumn, ScoreOptions};
use beamkit::sdt::{
    band_size_sweep, diagnose_score_rows, k_sweep, write_plot_csv, write_summary, write_summary_per_machine,
    write_summary_rows, PlotRow, SweepInput, SweepOptions, SummaryRow, ViewFeatures,
};
use beamkit::synth::{generate_feature_corpus, generate_wave_corpus, SynthSpec, WaveSpec};
use beamkit::{ClipVector, Error, Pooling, Result, Split};

use crate::output::Outputs;
use crate::{ConfigArgs, RegimeArg, SplitArg, SynthKind};

pub fn resolve_config(a: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut ov = a.set.clone();
    if let Some(v) = &a.views {
        ov.push(format!("pooling={v}"));
    }
    if let Some(k) = &a.k {
        ov.push(format!("k_list=[{k}]"));
    }
    if let Some(b) = &a.band {
        let mut it = b.split(',').map(str::trim);
        let c = it.next().unwrap_or_default();
        let s = it.next().unwrap_or(c);
        if it.next().is_some() {
            return Err(Error::Config(format!("--band expects C or C,s, got '{b}'")));
        }
        ov.push(format!("band_c={c}"));
        ov.push(format!("band_s={s}"));
    }
    if let Some(v) = &a.agg {
        ov.push(format!("aggregation={v}"));
    }
    if let Some(v) = &a.dmm {
        ov.push(format!("dmm_agg={v}"));
    }
    if let Some(p) = a.pauc_p {
        ov.push(format!("pauc_p={p}"));
    }
    cfg.apply_overrides(&ov)?;
    Ok(cfg)
}

fn config_value(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

/// Prints the effective configuration and records it next to the outputs.
fn echo_config(cfg: &RunConfig, out: Option<(&mut Outputs, &Path)>) -> Result<()> {
    eprintln!("config: {}", config_value(cfg));
    if let Some((o, dir)) = out {
        o.text(dir.join("config.json"), &cfg.to_json())?;
    }
    Ok(())
}

fn manifest(path: &Path) -> Result<(Vec<ClipRecord>, PathBuf)> {
    let recs = load_manifest(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((recs, dir))
}

fn features_of(records: &[&ClipRecord], dir: &Path, cfg: &RunConfig, view: Pooling) -> Result<Vec<ClipVector>> {
    load_cached(records, dir, view, axis_for(cfg.frontend))
}

fn split_records(records: &[ClipRecord], split: Split) -> Vec<&ClipRecord> {
    records.iter().filter(|r| r.split == split).collect()
}

fn bank_path(dir: &Path, view: Pooling) -> PathBuf {
    dir.join(format!("bank.{view}.bin"))
}

fn write_json<T: serde::Serialize>(o: &mut Outputs, path: PathBuf, value: &T) -> Result<()> {
    o.text(path, &serde_json::to_string_pretty(value).expect("serializes"))
}

pub fn extract(manifest_path: &Path, out: &Path, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let (records, dir) = manifest(manifest_path)?;
    let mut o = Outputs::dir(out)?;
    echo_config(&cfg, Some((&mut o, out)))?;
    let files = extract_to_cache(&records, &dir, &cfg, out)?;
    o.commit();
    println!("wrote {} feature files to {}", files.len(), out.display());
    Ok(())
}

pub fn build_bank(manifest_path: &Path, features: &Path, out: &Path, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let (records, _) = manifest(manifest_path)?;
    let refs = split_records(&records, Split::Train);
    if refs.is_empty() {
        return Err(Error::Empty("training clips in the manifest"));
    }
    let mut o = Outputs::dir(out)?;
    echo_config(&cfg, Some((&mut o, out)))?;
    let (c, s) = cfg.band();
    for view in cfg.views() {
        let vecs = features_of(&refs, features, &cfg, view)?;
        let spec = make_band_spec(vecs[0].len(), c, s)?;
        let bank = MemoryBank::build(&vecs, spec, &cfg.k_list, cfg.frontend_hash())?;
        let path = o.add(bank_path(out, view));
        save_bank(&bank, &path)?;
        println!("{}: R={} bands={}", path.display(), bank.len(), bank.spec().n_bands());
    }
    o.commit();
    Ok(())
}

pub fn score(manifest_path: &Path, features: &Path, bank_dir: &Path, out: &Path, split: SplitArg, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let (records, _) = manifest(manifest_path)?;
    let chosen: Vec<&ClipRecord> = records
        .iter()
        .filter(|r| match split {
            SplitArg::Test => r.split == Split::Test,
            SplitArg::Train => r.split == Split::Train,
            SplitArg::All => true,
        })
        .collect();
    if chosen.is_empty() {
        return Err(Error::Empty("clips to score"));
    }
    echo_config(&cfg, None)?;
    let views = cfg.views();
    let mut banks = Vec::new();
    for &view in &views {
        let (bank, _) = load_bank_checked(bank_path(bank_dir, view), &cfg.frontend_hash())?;
        if let Some(k) = cfg.k_list.iter().find(|&&k| k > 0 && !bank.k_list().contains(&k)) {
            return Err(Error::invalid(format!(
                "bank for view {view} has no scales for K={k} (built with {:?})",
                bank.k_list()
            )));
        }
        banks.push((view, bank));
    }
    let feats: Vec<Vec<ClipVector>> = views
        .iter()
        .map(|&v| features_of(&chosen, features, &cfg, v))
        .collect::<Result<_>>()?;
    let bank_refs: Vec<(Pooling, &MemoryBank)> = banks.iter().map(|(v, b)| (*v, b)).collect();
    let opts = ScoreOptions::from_config(&cfg);
    let clips = chosen
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let f: Vec<(Pooling, &[f64])> = views.iter().zip(&feats).map(|(&v, fs)| (v, fs[i].as_slice())).collect();
            score_clip(&r.clip_id, &f, &bank_refs, &opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = clips.iter().flat_map(|c| c.rows()).collect();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut o = Outputs::new();
    o.add(out.to_path_buf());
    write_scores(out, &rows, Some(&config_value(&cfg)))?;
    o.commit();
    println!("wrote {} rows for {} clips to {}", rows.len(), clips.len(), out.display());
    Ok(())
}

fn sidecar_config(scores: &Path) -> Option<RunConfig> {
    let bytes = std::fs::read(config_sidecar(scores)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

pub fn eval(manifest_path: &Path, scores: &Path, out: &Path, column: Option<&str>, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let (records, _) = manifest(manifest_path)?;
    let rows = read_scores(scores)?;
    let mut sel = ScoreSelector::default_for(&rows)?;
    if let Some(c) = column {
        sel.column = c.parse::<ScoreColumn>()?;
        if sel.column != ScoreColumn::Dmm && sel.view.is_none() {
            sel.view = rows.first().map(|r| r.view);
        }
    }
    if a.views.is_some() {
        sel.view = cfg.views().first().copied();
    }
    if a.k.is_some() {
        sel.k = cfg.k_list.first().copied();
    }
    let picked = select_scores(&rows, &sel)?;
    let table = ScoreTable::join(&picked, &records)?;
    let mut report = EvalReport::compute(&table, cfg.pauc_p, cfg.pauc_standardized, cfg.domain_auc)?;
    let view = sel.view.filter(|_| sel.column != ScoreColumn::Dmm);
    report.score_column = Some(match (view, sel.k) {
        (Some(v), Some(k)) => format!("{}[{v},K={k}]", sel.column),
        (None, Some(k)) => format!("{}[K={k}]", sel.column),
        _ => sel.column.to_string(),
    });
    let mut o = Outputs::dir(out)?;
    echo_config(&cfg, Some((&mut o, out)))?;
    let json = o.add(out.join("eval.json"));
    report.write_json(&json)?;
    let csv = o.add(out.join("eval.csv"));
    report.write_csv(&csv)?;
    o.commit();
    let dg = report.official_dg.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "{}: official_2020={:.4} harmonic={:.4} official_dg={dg}",
        report.score_column.as_deref().unwrap_or(""),
        report.official_2020,
        report.harmonic
    );
    Ok(())
}

fn regimes(r: RegimeArg) -> Option<bool> {
    match r {
        RegimeArg::Auto => None,
        RegimeArg::On => Some(true),
        RegimeArg::Off => Some(false),
    }
}

pub fn diagnose(manifest_path: &Path, scores: &Path, out: &Path, r: RegimeArg, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let (records, _) = manifest(manifest_path)?;
    let rows = read_scores(scores)?;
    let views = diagnose_score_rows(&rows, &records, regimes(r))?;
    let band_size = match (&a.band, sidecar_config(scores)) {
        (None, Some(sc)) => sc.band().0,
        _ => cfg.band().0,
    };
    let mut o = Outputs::dir(out)?;
    echo_config(&cfg, Some((&mut o, out)))?;
    write_json(&mut o, out.join("diagnose.json"), &views)?;
    let table: Vec<SummaryRow> = views
        .iter()
        .map(|v| SummaryRow::from_averages(band_size, v.view, &v.averages.moments_then_ratio))
        .collect();
    let path = o.add(out.join("sdt_summary.csv"));
    write_summary_rows(&path, &table)?;
    o.commit();
    for v in &views {
        let p = &v.pooled;
        println!(
            "{}: Var(Sub)/Var(Glob)={:.4} d'_Glob={:.4} d'_Sub={:.4} condition={}",
            v.view, p.ratio_sub_glob, p.dprime_glob, p.dprime_sub, p.condition
        );
    }
    Ok(())
}

fn sweep_input(manifest_path: &Path, features: &Path, cfg: &RunConfig) -> Result<SweepInput> {
    let (records, _) = manifest(manifest_path)?;
    let refs = split_records(&records, Split::Train);
    let tests = split_records(&records, Split::Test);
    if refs.is_empty() || tests.is_empty() {
        return Err(Error::invalid("sweeps need training and test clips in the manifest"));
    }
    let views = cfg
        .views()
        .into_iter()
        .map(|v| {
            Ok(ViewFeatures {
                view: v,
                refs: features_of(&refs, features, cfg, v)?,
                tests: features_of(&tests, features, cfg, v)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepInput {
        tests: tests.into_iter().cloned().collect(),
        views,
        config_hash: cfg.frontend_hash(),
    })
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Config(format!("{what}: '{s}' is not a non-negative integer"))))
        .collect()
}

pub fn sweep_bands(manifest_path: &Path, features: &Path, sizes: &str, out: &Path, r: RegimeArg, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let sizes = parse_list(sizes, "--sizes")?;
    let input = sweep_input(manifest_path, features, &cfg)?;
    let opts = SweepOptions {
        use_regimes: regimes(r),
        ..SweepOptions::from_config(&cfg)
    };
    let points = band_size_sweep(&input, &sizes, &opts)?;
    let mut o = Outputs::dir(out)?;
    echo_config(&cfg, Some((&mut o, out)))?;
    write_json(&mut o, out.join("sweep_bands.json"), &points)?;
    write_summary(o.add(out.join("sdt_summary.csv")), &points)?;
    write_summary_per_machine(o.add(out.join("sdt_per_machine.csv")), &points)?;
    write_plot_csv(o.add(out.join("plot_bands.csv")), &PlotRow::from_band_points(&points))?;
    o.commit();
    for row in SummaryRow::from_points(&points) {
        println!(
            "C={} {}: Var(Sub)/Var(Glob)={:.4} d'_Glob={:.4} d'_Sub={:.4}",
            row.band_size, row.view, row.ratio_sub_glob, row.dprime_glob, row.dprime_sub
        );
    }
    Ok(())
}

pub fn sweep_k(manifest_path: &Path, features: &Path, out: &Path, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    let input = sweep_input(manifest_path, features, &cfg)?;
    let points = k_sweep(&input, &cfg.k_list, &SweepOptions::from_config(&cfg))?;
    let mut o = Outputs::dir(out)?;
    echo_config(&cfg, Some((&mut o, out)))?;
    write_json(&mut o, out.join("sweep_k.json"), &points)?;
    write_plot_csv(o.add(out.join("plot_k.csv")), &PlotRow::from_k_points(&points))?;
    o.commit();
    for p in &points {
        println!("K={} {}: official_2020={:.4}", p.k, p.variant, p.eval.official_2020);
    }
    Ok(())
}

pub fn bench(runs: usize, bank_size: usize, out: Option<&Path>, a: &ConfigArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    echo_config(&cfg, None)?;
    let opts = CostOptions {
        n_runs: runs,
        bank_size,
        k: cfg.k_list.first().copied().unwrap_or(1),
        ..CostOptions::default()
    };
    let rows = bench_all(&cfg, &opts)?;
    if let Some(path) = out {
        let mut o = Outputs::new();
        write_json(&mut o, path.to_path_buf(), &rows)?;
        o.commit();
    }
    print!("{}", format_cost_table(&rows));
    Ok(())
}

pub fn synth(out: &Path, kind: SynthKind, seed: u64, counts: [usize; 3], seconds: f64, dim: usize, bands: usize) -> Result<()> {
    let [refs, normal, anomalous] = counts;
    match kind {
        SynthKind::Wave => {
            let spec = WaveSpec {
                seed,
                n_refs: refs,
                n_normal: normal,
                n_anomalous: anomalous,
                seconds,
                ..WaveSpec::default()
            };
            let m = generate_wave_corpus(&spec, out)?;
            println!("{}", m.display());
        }
        SynthKind::Features => {
            let corpus = generate_feature_corpus(&SynthSpec::new(seed, refs, normal, anomalous, dim, bands))?;
            let mut o = Outputs::dir(out)?;
            let feat_dir = out.join("features");
            std::fs::create_dir_all(&feat_dir).map_err(|e| Error::io(&feat_dir, e))?;
            let all = corpus.ref_records.iter().zip(&corpus.refs).chain(corpus.test_records.iter().zip(&corpus.tests));
            for (r, v) in all {
                o.add(write_cached(&feat_dir, &r.clip_id, v)?);
            }
            let m = o.add(out.join("manifest.csv"));
            let records: Vec<ClipRecord> = corpus.ref_records.iter().chain(&corpus.test_records).cloned().collect();
            save_manifest(&m, &records)?;
            o.commit();
            println!("{}", m.display());
        }
    }
    Ok(())
}
