//! Confusion matrices, error rate, Brier score, ROC curves and AUC.
//!
//! A case is predicted positive when its probability is at least the
//! threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Number of false-positive-rate grid points used by [`aggregate_roc`].
pub const ROC_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_counts(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

pub fn confusion_matrix(truth: &[u8], probs: &[f64], threshold: f64) -> Result<ConfusionMatrix> {
    check_pair(truth, probs)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in truth.iter().zip(probs) {
        match (y, p >= threshold) {
            (1, true) => cm.tp += 1,
            (1, false) => cm.fn_ += 1,
            (_, true) => cm.fp += 1,
            (_, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// `(FN + FP) / n`; 0 for an empty matrix.
pub fn error_rate(cm: &ConfusionMatrix) -> f64 {
    if cm.n() == 0 {
        return 0.0;
    }
    (cm.fn_ + cm.fp) as f64 / cm.n() as f64
}

/// `1 − error rate`, so the two always add up to exactly 1.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    1.0 - error_rate(cm)
}

/// True positive rate `TP / (TP + FN)`; `None` without positives.
pub fn sensitivity(cm: &ConfusionMatrix) -> Option<f64> {
    let p = cm.tp + cm.fn_;
    (p > 0).then(|| cm.tp as f64 / p as f64)
}

/// True negative rate `TN / (TN + FP)`; `None` without negatives.
pub fn specificity(cm: &ConfusionMatrix) -> Option<f64> {
    let n = cm.tn + cm.fp;
    (n > 0).then(|| cm.tn as f64 / n as f64)
}

fn check_pair(truth: &[u8], probs: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::invalid("no cases to evaluate"));
    }
    if truth.len() != probs.len() {
        return Err(Error::invalid("truth and probabilities differ in length"));
    }
    if truth.iter().any(|&y| y > 1) {
        return Err(Error::invalid("truth must be 0/1"));
    }
    Ok(())
}

/// Mean squared difference between probabilities and outcomes.
pub fn brier_score(probs: &[f64], truth: &[u8]) -> Result<f64> {
    check_pair(truth, probs)?;
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let ss: f64 = probs
        .iter()
        .zip(truth)
        .map(|(&p, &y)| (p - f64::from(y)).powi(2))
        .sum();
    Ok(ss / probs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Points from (0, 0) to (1, 1). Cases sharing a score enter together, so
/// ties give one diagonal segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

pub fn roc_curve(probs: &[f64], truth: &[u8]) -> Result<RocCurve> {
    check_pair(truth, probs)?;
    if probs.iter().any(|p| p.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let pos = truth.iter().filter(|&&y| y == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("ROC needs both classes in the truth"));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).expect("no NaN"));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = probs[order[k]];
        while k < order.len() && probs[order[k]] == s {
            if truth[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) * 0.5)
        .sum()
}

/// TPR of a curve at `fpr`: the highest TPR where the curve runs vertically
/// at `fpr`, linear interpolation elsewhere.
fn tpr_at(curve: &RocCurve, fpr: f64) -> f64 {
    let pts = &curve.points;
    let mut best: Option<f64> = None;
    for p in pts {
        if p.fpr == fpr {
            best = Some(best.map_or(p.tpr, |b: f64| b.max(p.tpr)));
        }
    }
    if let Some(b) = best {
        return b;
    }
    for w in pts.windows(2) {
        if w[0].fpr < fpr && fpr < w[1].fpr {
            let t = (fpr - w[0].fpr) / (w[1].fpr - w[0].fpr);
            return w[0].tpr + t * (w[1].tpr - w[0].tpr);
        }
    }
    if fpr <= 0.0 {
        0.0
    } else {
        1.0
    }
}

/// Vertical averaging: mean TPR of all curves on a grid of
/// [`ROC_GRID_POINTS`] false positive rates, starting at (0, 0) and ending
/// at (1, 1).
pub fn aggregate_roc(curves: &[RocCurve]) -> Result<RocCurve> {
    if curves.is_empty() {
        return Err(Error::invalid("no ROC curves to aggregate"));
    }
    let m = ROC_GRID_POINTS - 1;
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    for i in 0..=m {
        let fpr = i as f64 / m as f64;
        let tpr = curves.iter().map(|c| tpr_at(c, fpr)).sum::<f64>() / curves.len() as f64;
        points.push(RocPoint { fpr, tpr });
    }
    points.push(RocPoint { fpr: 1.0, tpr: 1.0 });
    points.dedup();
    Ok(RocCurve { points })
}

/// Axis convention for ROC export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RocAxes {
    /// False positive rate against true positive rate.
    FprTpr,
    /// Specificity (1 − FPR) against sensitivity.
    SpecificitySensitivity,
}

/// Two-column CSV of a curve.
pub fn write_roc_csv<W: Write>(curve: &RocCurve, axes: RocAxes, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match axes {
        RocAxes::FprTpr => w.write_record(["fpr", "tpr"])?,
        RocAxes::SpecificitySensitivity => w.write_record(["specificity", "sensitivity"])?,
    }
    for p in &curve.points {
        let x = match axes {
            RocAxes::FprTpr => p.fpr,
            RocAxes::SpecificitySensitivity => 1.0 - p.fpr,
        };
        w.write_record([format!("{x}"), format!("{}", p.tpr)])?;
    }
    w.flush().map_err(|e| Error::io("<roc>", e))?;
    Ok(())
}
