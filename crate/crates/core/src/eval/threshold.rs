use crate::error::{Error, Result};

/// Number of grid points between 0 and the maximum score inclusive.
pub const GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub balanced_accuracy: f64,
}

/// `{0, 0.01 max, ..., max}`.
pub fn threshold_grid(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(0.0, f64::max);
    (0..GRID_POINTS)
        .map(|i| max * i as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

/// Balanced accuracy of the rule "positive iff score >= threshold".
pub fn balanced_accuracy_at(scores: &[f64], positive: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut p, mut tn, mut n) = (0usize, 0usize, 0usize, 0usize);
    for (s, &y) in scores.iter().zip(positive) {
        let pred = *s >= threshold;
        if y {
            p += 1;
            tp += usize::from(pred);
        } else {
            n += 1;
            tn += usize::from(!pred);
        }
    }
    0.5 * (tp as f64 / p as f64 + tn as f64 / n as f64)
}

/// Grid search maximising balanced accuracy; ties go to the smallest
/// threshold.
pub fn tune_threshold(scores: &[f64], positive: &[bool]) -> Result<Threshold> {
    if scores.len() != positive.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if !positive.iter().any(|y| *y) || positive.iter().all(|y| *y) {
        return Err(Error::SingleClass("threshold tuning"));
    }
    if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("scores must be finite and non-negative"));
    }
    // Sort once, then sweep the grid with two pointers.
    let mut order: Vec<(f64, bool)> = scores.iter().copied().zip(positive.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_pos = positive.iter().filter(|y| **y).count();
    let n_neg = positive.len() - n_pos;
    let mut below_pos = 0usize;
    let mut below_neg = 0usize;
    let mut cursor = 0;
    let mut best = Threshold {
        value: 0.0,
        balanced_accuracy: f64::NEG_INFINITY,
    };
    for thr in threshold_grid(scores) {
        while cursor < order.len() && order[cursor].0 < thr {
            if order[cursor].1 {
                below_pos += 1;
            } else {
                below_neg += 1;
            }
            cursor += 1;
        }
        let tpr = (n_pos - below_pos) as f64 / n_pos as f64;
        let tnr = below_neg as f64 / n_neg as f64;
        let ba = 0.5 * (tpr + tnr);
        if ba > best.balanced_accuracy {
            best = Threshold {
                value: thr,
                balanced_accuracy: ba,
            };
        }
    }
    Ok(best)
}
