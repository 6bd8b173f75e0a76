//! Signal-detection diagnostics of raw global versus sub-band scores.
//!
//! All statistics are computed on normal (`N`) and anomalous test clips with
//! population moments. With `P = S_uni − S_sub` and `B = 2(S_uni − S_glob)`
//! the clip-wise identities `S_sub = S_uni − P` and `S_glob = S_uni − ½B`
//! hold by construction.

mod sweep;
mod table;

pub use sweep::{
    band_size_sweep, diagnose_score_rows, diagnose_view, k_sweep, regime_of, BandSizePoint, KSweepPoint, SweepInput, SweepOptions, ViewDiagnostics,
    ViewFeatures,
};
pub use table::{write_plot_csv, write_summary, write_summary_per_machine, write_summary_rows, PlotRow, SummaryRow};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metrics::{mean, pcov, pvar};
use crate::types::Label;

/// Deviation terms of one clip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationTerms {
    /// Tied-index mismatch penalty `S_uni − S_sub`.
    pub p: f64,
    /// Energy-weighting deviation `2(S_uni − S_glob)`.
    pub b: f64,
}

pub fn compute_deviation_terms(s_glob: f64, s_uni: f64, s_sub: f64) -> Result<DeviationTerms> {
    crate::error::ensure_finite(&[s_glob, s_uni, s_sub])?;
    Ok(DeviationTerms {
        p: s_uni - s_sub,
        b: 2.0 * (s_uni - s_glob),
    })
}

/// Raw scores of one test clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdtSample {
    pub s_glob: f64,
    pub s_uni: f64,
    pub s_sub: f64,
    /// LDN-normalized score, reported separately from the unnormalized quantities.
    pub s_ldn: Option<f64>,
    pub label: Label,
    pub regime: Option<String>,
    /// Energy coupling of the tied-reference decomposition.
    pub rho: Option<f64>,
}

/// Law-of-total-variance terms over a regime partition of the normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    pub n_regimes: usize,
    pub g0: f64,
    pub gamma: f64,
    pub c_var: f64,
    pub c_var_negative: bool,
    /// `Δ(S_sub) ≥ √C_var · Δ(S_glob)`; `None` when `C_var < 0`.
    pub cvar_condition: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdtReport {
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub var_sub: f64,
    pub var_uni: f64,
    pub var_glob: f64,
    pub ratio_sub_uni: f64,
    pub ratio_uni_glob: f64,
    pub ratio_sub_glob: f64,
    pub delta_glob: f64,
    pub delta_sub: f64,
    pub delta_uni: f64,
    pub delta_p: f64,
    pub delta_b: f64,
    pub dprime_glob: f64,
    pub dprime_sub: f64,
    /// `d′(S_sub) / d′(S_glob)`.
    pub dprime_ratio: f64,
    pub p0: f64,
    pub lambda: f64,
    /// `√(Var(S_sub|N) / Var(S_glob|N))`.
    pub eta: f64,
    /// `Δ(S_sub) ≥ η · Δ(S_glob)`.
    pub condition: bool,
    pub regime: Option<RegimeStats>,
    pub dprime_ldn: Option<f64>,
    /// `d′ ratio − (Δ ratio)/√(variance ratio)`.
    pub identity_residual: f64,
    /// Condition with `Δ(S_glob) > 0` implies a d′ ratio of at least one.
    pub condition_consistent: bool,
    /// Largest energy coupling over the samples, when recorded.
    pub max_rho: Option<f64>,
}

fn ratio(num: f64, den: f64, what: &'static str) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::ZeroVariance(what));
    }
    Ok(num / den)
}

fn regime_stats(normals: &[&SdtSample]) -> Result<(usize, f64, f64)> {
    let mut groups: BTreeMap<&str, Vec<&SdtSample>> = BTreeMap::new();
    for s in normals {
        let g = s
            .regime
            .as_deref()
            .ok_or_else(|| Error::invalid("regime analysis requested but a normal clip has no regime label"))?;
        groups.entry(g).or_default().push(s);
    }
    let n = normals.len() as f64;
    let (mut ev_glob, mut ev_uni) = (0.0, 0.0);
    let mut means = Vec::with_capacity(groups.len());
    for g in groups.values() {
        let w = g.len() as f64 / n;
        let glob: Vec<f64> = g.iter().map(|s| s.s_glob).collect();
        let uni: Vec<f64> = g.iter().map(|s| s.s_uni).collect();
        ev_glob += w * pvar(&glob);
        ev_uni += w * pvar(&uni);
        means.push((w, mean(&uni)));
    }
    let grand: f64 = means.iter().map(|(w, m)| w * m).sum();
    let between: f64 = means.iter().map(|(w, m)| w * (m - grand).powi(2)).sum();
    let g0 = ratio(ev_glob, ev_uni, "within-regime S_uni")?;
    let gamma = ratio(between, ev_uni, "within-regime S_uni")?;
    Ok((groups.len(), g0, gamma))
}

/// Builds the report. With `use_regimes`, every normal sample needs a regime
/// label.
pub fn sdt_report(samples: &[SdtSample], use_regimes: bool) -> Result<SdtReport> {
    let normals: Vec<&SdtSample> = samples.iter().filter(|s| s.label == Label::Normal).collect();
    let anomalies: Vec<&SdtSample> = samples.iter().filter(|s| s.label == Label::Anomalous).collect();
    if normals.len() < 2 {
        return Err(Error::invalid("SDT diagnostics need at least 2 normal clips"));
    }
    if anomalies.is_empty() {
        return Err(Error::EmptyClass("anomalous"));
    }
    let col = |v: &[&SdtSample], f: fn(&SdtSample) -> f64| v.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let (n_glob, n_uni, n_sub) = (col(&normals, |s| s.s_glob), col(&normals, |s| s.s_uni), col(&normals, |s| s.s_sub));
    let n_p: Vec<f64> = n_uni.iter().zip(&n_sub).map(|(u, s)| u - s).collect();
    let (a_glob, a_uni, a_sub) = (col(&anomalies, |s| s.s_glob), col(&anomalies, |s| s.s_uni), col(&anomalies, |s| s.s_sub));

    let (var_glob, var_uni, var_sub) = (pvar(&n_glob), pvar(&n_uni), pvar(&n_sub));
    let delta = |a: &[f64], n: &[f64]| mean(a) - mean(n);
    let (delta_glob, delta_sub, delta_uni) = (delta(&a_glob, &n_glob), delta(&a_sub, &n_sub), delta(&a_uni, &n_uni));
    let a_p: Vec<f64> = a_uni.iter().zip(&a_sub).map(|(u, s)| u - s).collect();
    let b_of = |u: &[f64], g: &[f64]| u.iter().zip(g).map(|(u, g)| 2.0 * (u - g)).collect::<Vec<f64>>();
    let delta_p = delta(&a_p, &n_p);
    let delta_b = delta(&b_of(&a_uni, &a_glob), &b_of(&n_uni, &n_glob));

    let ratio_sub_glob = ratio(var_sub, var_glob, "normal S_glob")?;
    let ratio_uni_glob = ratio(var_uni, var_glob, "normal S_glob")?;
    let ratio_sub_uni = ratio(var_sub, var_uni, "normal S_uni")?;
    let dprime_glob = delta_glob / var_glob.sqrt();
    let dprime_sub = ratio(delta_sub, var_sub.sqrt(), "normal S_sub")?;
    let dprime_ratio = dprime_sub / dprime_glob;
    let eta = ratio_sub_glob.sqrt();
    let condition = delta_sub >= eta * delta_glob;
    let identity = (delta_sub / delta_glob) / ratio_sub_glob.sqrt();
    let identity_residual = if dprime_ratio.is_finite() { dprime_ratio - identity } else { 0.0 };
    let condition_consistent = !(condition && delta_glob > 0.0) || dprime_ratio >= 1.0 - 1e-12;
    if !condition_consistent {
        log::error!("SDT report: condition holds but d' ratio {dprime_ratio} < 1");
    }

    let p0 = pvar(&n_p) / var_glob;
    let lambda = (-2.0 * pcov(&n_sub, &n_p) / var_glob).max(0.0);
    let regime = if use_regimes {
        let (n_regimes, g0, gamma) = regime_stats(&normals)?;
        let c_var = (1.0 + gamma) / g0 + lambda - p0;
        if c_var < 0.0 {
            log::warn!("C_var = {c_var} is negative");
        }
        Some(RegimeStats {
            n_regimes,
            g0,
            gamma,
            c_var,
            c_var_negative: c_var < 0.0,
            cvar_condition: (c_var >= 0.0).then(|| delta_sub >= c_var.sqrt() * delta_glob),
        })
    } else {
        None
    };

    let dprime_ldn = match samples.iter().map(|s| s.s_ldn).collect::<Option<Vec<f64>>>() {
        Some(ldn) => {
            let (n, a): (Vec<_>, Vec<_>) = ldn.iter().zip(samples).partition(|(_, s)| s.label == Label::Normal);
            let n: Vec<f64> = n.into_iter().map(|(v, _)| *v).collect();
            let a: Vec<f64> = a.into_iter().map(|(v, _)| *v).collect();
            crate::metrics::dprime(&n, &a).ok()
        }
        None => None,
    };

    Ok(SdtReport {
        n_normal: normals.len(),
        n_anomalous: anomalies.len(),
        var_sub,
        var_uni,
        var_glob,
        ratio_sub_uni,
        ratio_uni_glob,
        ratio_sub_glob,
        delta_glob,
        delta_sub,
        delta_uni,
        delta_p,
        delta_b,
        dprime_glob,
        dprime_sub,
        dprime_ratio,
        p0,
        lambda,
        eta,
        condition,
        regime,
        dprime_ldn,
        identity_residual,
        condition_consistent,
        max_rho: samples
            .iter()
            .map(|s| s.rho)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max)),
    })
}

/// Summary over several reports (one per machine type).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRatios {
    pub ratio_sub_uni: f64,
    pub ratio_uni_glob: f64,
    pub ratio_sub_glob: f64,
    pub delta_glob: f64,
    pub delta_sub: f64,
    pub dprime_glob: f64,
    pub dprime_sub: f64,
    pub dprime_ratio: f64,
    pub condition: bool,
}

/// Both averaging orders: ratios of the averaged moments, and averages of
/// the per-report ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineAverages {
    pub moments_then_ratio: AveragedRatios,
    pub ratios_then_mean: AveragedRatios,
}

pub fn average_reports(reports: &[&SdtReport]) -> Result<MachineAverages> {
    if reports.is_empty() {
        return Err(Error::Empty("SDT reports"));
    }
    let avg = |f: fn(&SdtReport) -> f64| mean(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
    let (vs, vu, vg) = (avg(|r| r.var_sub), avg(|r| r.var_uni), avg(|r| r.var_glob));
    let (dg, ds) = (avg(|r| r.delta_glob), avg(|r| r.delta_sub));
    let (dpg, dps) = (dg / vg.sqrt(), ds / vs.sqrt());
    let moments_then_ratio = AveragedRatios {
        ratio_sub_uni: vs / vu,
        ratio_uni_glob: vu / vg,
        ratio_sub_glob: vs / vg,
        delta_glob: dg,
        delta_sub: ds,
        dprime_glob: dpg,
        dprime_sub: dps,
        dprime_ratio: dps / dpg,
        condition: ds >= (vs / vg).sqrt() * dg,
    };
    let ratios_then_mean = AveragedRatios {
        ratio_sub_uni: avg(|r| r.ratio_sub_uni),
        ratio_uni_glob: avg(|r| r.ratio_uni_glob),
        ratio_sub_glob: avg(|r| r.ratio_sub_glob),
        delta_glob: dg,
        delta_sub: ds,
        dprime_glob: avg(|r| r.dprime_glob),
        dprime_sub: avg(|r| r.dprime_sub),
        dprime_ratio: avg(|r| r.dprime_ratio),
        condition: ds >= avg(|r| r.ratio_sub_glob).sqrt() * dg,
    };
    Ok(MachineAverages {
        moments_then_ratio,
        ratios_then_mean,
    })
}
