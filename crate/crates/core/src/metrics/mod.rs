//! Ranking metrics: AUC, partial AUC, official-score composites and d′.
//!
//! Higher scores mean "more anomalous". Variances are population variances
//! (divide by n) everywhere.

mod report;

pub use report::{select_scores, EvalReport, EvalRow, MachineReport, ScoreSelector, ScoreTable, SectionReport, TableRow};

use crate::error::{Error, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population variance.
pub fn pvar(v: &[f64]) -> f64 {
    pcov(v, v)
}

/// Population covariance of two equally long samples.
pub fn pcov(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64
}

fn check_classes(normal: &[f64], anomalous: &[f64]) -> Result<()> {
    if normal.is_empty() {
        return Err(Error::EmptyClass("normal"));
    }
    if anomalous.is_empty() {
        return Err(Error::EmptyClass("anomalous"));
    }
    crate::error::ensure_finite(normal)?;
    crate::error::ensure_finite(anomalous)
}

/// Mann–Whitney AUC with ties counted as one half.
pub fn auc(normal: &[f64], anomalous: &[f64]) -> Result<f64> {
    check_classes(normal, anomalous)?;
    let mut n = normal.to_vec();
    n.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &a in anomalous {
        let below = n.partition_point(|&x| x < a);
        let not_above = n.partition_point(|&x| x <= a);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (normal.len() as f64 * anomalous.len() as f64))
}

/// ROC vertices `(FPR, TPR)` obtained by lowering the threshold through each
/// distinct score. Tied scores produce a single diagonal step.
pub fn roc_curve(normal: &[f64], anomalous: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_classes(normal, anomalous)?;
    let mut all: Vec<(f64, bool)> = normal
        .iter()
        .map(|&s| (s, false))
        .chain(anomalous.iter().map(|&s| (s, true)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (nn, na) = (normal.len() as f64, anomalous.len() as f64);
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut pts = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push((fp as f64 / nn, tp as f64 / na));
    }
    Ok(pts)
}

/// Trapezoid area under the ROC for `FPR ∈ [0, p]`, interpolating at `p`.
fn partial_area(pts: &[(f64, f64)], p: f64) -> f64 {
    let mut area = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= p {
            break;
        }
        if x1 <= p {
            area += (x1 - x0) * (y0 + y1) / 2.0;
        } else {
            let y = y0 + (y1 - y0) * (p - x0) / (x1 - x0);
            area += (p - x0) * (y0 + y) / 2.0;
            break;
        }
    }
    area
}

/// Partial AUC over `FPR ∈ [0, p]`. The standardized form applies the McClish
/// correction, mapping chance to 0.5 and a perfect ranking to 1; otherwise
/// the raw area is divided by `p`.
pub fn pauc(normal: &[f64], anomalous: &[f64], p: f64, standardized: bool) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("pAUC range p must lie in (0, 1], got {p}")));
    }
    let area = partial_area(&roc_curve(normal, anomalous)?, p);
    if standardized {
        let min_area = p * p / 2.0;
        Ok(0.5 * (1.0 + (area - min_area) / (p - min_area)))
    } else {
        Ok(area / p)
    }
}

/// Harmonic mean; 0 if any input is 0.
pub fn hmean(v: &[f64]) -> f64 {
    if v.iter().any(|&x| x <= 0.0) {
        return 0.0;
    }
    v.len() as f64 / v.iter().map(|x| 1.0 / x).sum::<f64>()
}

/// Arithmetic composite. `per_type[t]` lists the `(AUC, pAUC)` pairs of the
/// sections of machine type `t`.
pub fn official_2020(per_type: &[Vec<(f64, f64)>]) -> Result<f64> {
    if per_type.is_empty() || per_type.iter().any(|t| t.is_empty()) {
        return Err(Error::Empty("section metrics"));
    }
    let type_scores: Vec<f64> = per_type
        .iter()
        .map(|secs| {
            let a: Vec<f64> = secs.iter().map(|s| s.0).collect();
            let p: Vec<f64> = secs.iter().map(|s| s.1).collect();
            0.5 * (mean(&a) + mean(&p))
        })
        .collect();
    Ok(mean(&type_scores))
}

/// Harmonic composite of `(source AUC, target AUC, mixed pAUC)` per machine
/// type, then across types. A zero metric makes the result 0.
pub fn official_dg(per_type: &[(f64, f64, f64)]) -> Result<f64> {
    if per_type.is_empty() {
        return Err(Error::Empty("machine-type metrics"));
    }
    let types: Vec<f64> = per_type.iter().map(|&(s, t, p)| hmean(&[s, t, p])).collect();
    if types.contains(&0.0) {
        log::warn!("a zero metric makes the harmonic official score 0");
    }
    Ok(hmean(&types))
}

/// `d′ = (mean(A) − mean(N)) / √Var(N)`.
pub fn dprime(normal: &[f64], anomalous: &[f64]) -> Result<f64> {
    check_classes(normal, anomalous)?;
    let var = pvar(normal);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance("normal scores"));
    }
    Ok((mean(anomalous) - mean(normal)) / var.sqrt())
}
