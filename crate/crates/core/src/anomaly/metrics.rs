use serde::{Deserialize, Serialize};

use crate::error::{FitsError, Result};

pub const MAX_THRESHOLD_CANDIDATES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Whether predictions were point-adjusted before scoring.
    pub adjusted: bool,
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(FitsError::shape(format!("{a} predictions for {b} labels")));
    }
    Ok(())
}

/// Maximal runs `[start, end)` of true labels.
fn segments(labels: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < labels.len() {
        if labels[t] {
            let start = t;
            while t < labels.len() && labels[t] {
                t += 1;
            }
            out.push((start, t));
        } else {
            t += 1;
        }
    }
    out
}

/// Marks a whole labeled segment as detected once any of its steps is.
pub fn point_adjust(pred: &[bool], labels: &[bool]) -> Result<Vec<bool>> {
    check_len(pred.len(), labels.len())?;
    let mut out = pred.to_vec();
    for (a, b) in segments(labels) {
        if pred[a..b].iter().any(|&p| p) {
            out[a..b].iter_mut().for_each(|p| *p = true);
        }
    }
    Ok(out)
}

fn report_from_counts(tp: usize, fp: usize, fn_: usize, total: usize, threshold: f64, adjusted: bool) -> DetectionReport {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    DetectionReport {
        threshold,
        precision,
        recall,
        f1,
        accuracy: ratio(total - fp - fn_, total),
        adjusted,
    }
}

/// Pointwise precision, recall, F1 and accuracy. Precision is 0 when
/// nothing is predicted. `threshold` is NaN and `adjusted` false.
pub fn prf1(pred: &[bool], labels: &[bool]) -> Result<DetectionReport> {
    check_len(pred.len(), labels.len())?;
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (&p, &l) in pred.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    Ok(report_from_counts(tp, fp, fn_, pred.len(), f64::NAN, false))
}

/// Ascending, deduplicated order statistics at evenly spaced ranks.
fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = n.min(MAX_THRESHOLD_CANDIDATES);
    let mut out: Vec<f64> = (0..k)
        .map(|i| sorted[if k == 1 { 0 } else { (i * (n - 1) + (k - 1) / 2) / (k - 1) }])
        .collect();
    out.dedup();
    out
}

/// Picks the threshold maximizing point-adjusted F1, where a step is
/// predicted anomalous when its score is at least the threshold.
///
/// Candidates are up to 10,000 evenly spaced order statistics of the
/// scores (every score when there are fewer). Ties go to the higher
/// threshold.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> Result<DetectionReport> {
    check_len(scores.len(), labels.len())?;
    if !labels.iter().any(|&l| l) {
        return Err(FitsError::InvalidArgument(
            "threshold selection needs at least one anomalous label".into(),
        ));
    }
    if let Some(t) = scores.iter().position(|v| !v.is_finite()) {
        return Err(FitsError::InvalidValue(format!("score at step {t} is not finite")));
    }
    let n = scores.len();
    let candidates = threshold_candidates(scores);

    // A segment is detected iff its maximum score reaches the threshold;
    // every normal step at or above it is a false positive.
    let segs = segments(labels);
    let mut seg_max: Vec<(f64, usize)> = segs
        .iter()
        .map(|&(a, b)| (scores[a..b].iter().copied().fold(f64::NEG_INFINITY, f64::max), b - a))
        .collect();
    seg_max.sort_by(|x, y| x.0.total_cmp(&y.0));
    // suffix sums of segment lengths in ascending max order
    let mut suffix = vec![0usize; seg_max.len() + 1];
    for i in (0..seg_max.len()).rev() {
        suffix[i] = suffix[i + 1] + seg_max[i].1;
    }
    let mut normal: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();
    normal.sort_by(f64::total_cmp);
    let positives = suffix[0];

    let mut best: Option<DetectionReport> = None;
    for &thr in &candidates {
        let tp = suffix[seg_max.partition_point(|&(m, _)| m < thr)];
        let fp = normal.len() - normal.partition_point(|&s| s < thr);
        let rep = report_from_counts(tp, fp, positives - tp, n, thr, true);
        // candidates ascend, so >= keeps the higher threshold on ties
        if best.is_none_or(|b| rep.f1 >= b.f1) {
            best = Some(rep);
        }
    }
    Ok(best.expect("at least one candidate"))
}
