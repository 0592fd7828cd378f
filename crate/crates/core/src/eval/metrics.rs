use crate::error::{Error, Result};

/// Binary confusion counts with shift as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn metrics(&self) -> Result<ClassMetrics> {
        let n = self.total();
        if n == 0 {
            return Err(Error::Empty("classification input"));
        }
        let f1 = |tp: usize, fp: usize, fn_: usize| {
            let d = 2 * tp + fp + fn_;
            if d == 0 {
                0.0
            } else {
                (2 * tp) as f64 / d as f64
            }
        };
        let f1_shift = f1(self.tp, self.fp, self.fn_);
        let f1_hold = f1(self.tn, self.fn_, self.fp);
        let pos = self.tp + self.fn_;
        let neg = self.tn + self.fp;
        let f1_weighted = (pos as f64 * f1_shift + neg as f64 * f1_hold) / n as f64;
        let mut recalls = Vec::with_capacity(2);
        if pos > 0 {
            recalls.push(self.tp as f64 / pos as f64);
        }
        if neg > 0 {
            recalls.push(self.tn as f64 / neg as f64);
        }
        let bal_acc = recalls.iter().sum::<f64>() / recalls.len() as f64;
        Ok(ClassMetrics {
            f1_weighted,
            f1_hold,
            f1_shift,
            bal_acc,
        })
    }
}

/// Test-set metrics. "hold" names the negative class (hold or mid-turn).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub f1_weighted: f64,
    pub f1_hold: f64,
    pub f1_shift: f64,
    pub bal_acc: f64,
}

/// Metrics for boolean predictions against boolean truth (true = shift).
pub fn classification_metrics(predicted: &[bool], truth: &[bool]) -> Result<ClassMetrics> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    Confusion::from_predictions(predicted, truth).metrics()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_confusion() {
        let c = Confusion { tp: 40, fn_: 10, tn: 45, fp: 5 };
        let m = c.metrics().unwrap();
        assert!((m.bal_acc - 0.85).abs() < 1e-12);
        assert!((m.f1_shift - 80.0 / 95.0).abs() < 1e-12);
        assert!((m.f1_hold - 90.0 / 105.0).abs() < 1e-12);
        assert!(m.f1_weighted >= m.f1_shift.min(m.f1_hold) && m.f1_weighted <= m.f1_shift.max(m.f1_hold));
    }

    #[test]
    fn perfect_and_empty() {
        let truth = [true, false, true, false];
        let m = classification_metrics(&truth, &truth).unwrap();
        assert_eq!((m.f1_weighted, m.f1_hold, m.f1_shift, m.bal_acc), (1.0, 1.0, 1.0, 1.0));
        assert!(classification_metrics(&[], &[]).is_err());
        assert!(classification_metrics(&[true], &[]).is_err());
    }
}
