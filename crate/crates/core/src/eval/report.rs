use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{
    classification_metrics, confidence_interval_95, std_dev, tune_threshold, ClassMetrics, EventClass, ScoredEvent,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricSet {
    /// Pre-shift speech against mid-turn speech.
    SPred,
    /// Pre-shift speech against pre-hold speech.
    SHPred,
}

impl MetricSet {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricSet::SPred => "S-Pred",
            MetricSet::SHPred => "S/H-Pred",
        }
    }

    fn negative(self) -> EventClass {
        match self {
            MetricSet::SPred => EventClass::MidTurn,
            MetricSet::SHPred => EventClass::Hold,
        }
    }

    /// Scores and labels (true = shift) of the items relevant to this set.
    fn select(self, events: &[ScoredEvent]) -> (Vec<f64>, Vec<bool>) {
        events
            .iter()
            .filter(|e| e.class == EventClass::Shift || e.class == self.negative())
            .map(|e| (e.score, e.class == EventClass::Shift))
            .unzip()
    }
}

/// Scored validation and test items for one (condition, SNR, fold).
#[derive(Debug, Clone)]
pub struct FoldInput {
    pub condition: String,
    pub snr_db: Option<f64>,
    pub fold: usize,
    pub validation: Vec<ScoredEvent>,
    pub test: Vec<ScoredEvent>,
    /// Events dropped while scoring (window outside the stream).
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRow {
    pub metric_set: MetricSet,
    pub condition: String,
    pub snr_db: Option<f64>,
    pub fold: usize,
    pub threshold: f64,
    pub metrics: ClassMetrics,
    pub n_shift: usize,
    /// Negative-class count (holds or mid-turn points).
    pub n_hold: usize,
    pub n_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub metric_set: MetricSet,
    pub condition: String,
    pub snr_db: Option<f64>,
    pub n_folds: usize,
    pub threshold: f64,
    pub mean: ClassMetrics,
    pub f1_weighted_std: f64,
    pub bal_acc_std: f64,
    pub bal_acc_ci: (f64, f64),
    pub n_shift: usize,
    pub n_hold: usize,
    pub n_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<FoldRow>,
    pub aggregates: Vec<AggregateRow>,
}

pub const REPORT_HEADER: &str = "config_hash,kind,metric_set,condition,snr_db,fold,threshold,f1_weighted,f1_hold,f1_shift,bal_acc,f1_weighted_std,bal_acc_std,bal_acc_ci_low,bal_acc_ci_high,n_shift,n_hold,n_dropped";

fn fmt_snr(snr: Option<f64>) -> String {
    snr.map(|s| format!("{s}")).unwrap_or_default()
}

fn same_cell(a: &FoldInput, condition: &str, snr: Option<f64>) -> bool {
    a.condition == condition && a.snr_db.map(f64::to_bits) == snr.map(f64::to_bits)
}

/// Tune a threshold on each fold's validation items, apply it to the test
/// items and aggregate over folds per (condition, SNR).
///
/// Validation and test items of a fold must come from disjoint sessions.
/// Rows keep the input order; aggregates follow first appearance.
pub fn build_report(metric_set: MetricSet, inputs: &[FoldInput]) -> Result<EvalReport> {
    if inputs.is_empty() {
        return Err(Error::Empty("report input"));
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for input in inputs {
        let val_sessions: BTreeSet<&str> = input.validation.iter().map(|e| e.session_id.as_str()).collect();
        if let Some(s) = input.test.iter().find(|e| val_sessions.contains(e.session_id.as_str())) {
            return Err(Error::PartitionOverlap(format!(
                "session {:?} is in both validation and test of fold {} ({})",
                s.session_id, input.fold, input.condition
            )));
        }
        let (val_scores, val_labels) = metric_set.select(&input.validation);
        let threshold = tune_threshold(&val_scores, &val_labels)?.value;
        let (test_scores, truth) = metric_set.select(&input.test);
        let predicted: Vec<bool> = test_scores.iter().map(|s| *s >= threshold).collect();
        let metrics = classification_metrics(&predicted, &truth)?;
        let n_shift = truth.iter().filter(|t| **t).count();
        let n_hold = truth.len() - n_shift;
        if n_shift == 0 || n_hold == 0 {
            return Err(Error::SingleClass("test partition"));
        }
        rows.push(FoldRow {
            metric_set,
            condition: input.condition.clone(),
            snr_db: input.snr_db,
            fold: input.fold,
            threshold,
            metrics,
            n_shift,
            n_hold,
            n_dropped: input.dropped,
        });
    }

    let mut cells: Vec<(String, Option<f64>)> = Vec::new();
    for i in inputs {
        if !cells.iter().any(|(c, s)| same_cell(i, c, *s)) {
            cells.push((i.condition.clone(), i.snr_db));
        }
    }
    let aggregates = cells
        .into_iter()
        .map(|(condition, snr_db)| {
            let group: Vec<&FoldRow> = rows
                .iter()
                .filter(|r| r.condition == condition && r.snr_db.map(f64::to_bits) == snr_db.map(f64::to_bits))
                .collect();
            let col = |f: fn(&FoldRow) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let f1w = col(|r| r.metrics.f1_weighted);
            let ba = col(|r| r.metrics.bal_acc);
            let (ba_mean, lo, hi) = confidence_interval_95(&ba);
            AggregateRow {
                metric_set,
                condition,
                snr_db,
                n_folds: group.len(),
                threshold: avg(&col(|r| r.threshold)),
                mean: ClassMetrics {
                    f1_weighted: avg(&f1w),
                    f1_hold: avg(&col(|r| r.metrics.f1_hold)),
                    f1_shift: avg(&col(|r| r.metrics.f1_shift)),
                    bal_acc: ba_mean,
                },
                f1_weighted_std: std_dev(&f1w),
                bal_acc_std: std_dev(&ba),
                bal_acc_ci: (lo, hi),
                n_shift: group.iter().map(|r| r.n_shift).sum(),
                n_hold: group.iter().map(|r| r.n_hold).sum(),
                n_dropped: group.iter().map(|r| r.n_dropped).sum(),
            }
        })
        .collect();
    Ok(EvalReport { rows, aggregates })
}

impl EvalReport {
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{config_hash},fold,{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},,,,,{},{},{}",
                r.metric_set.as_str(),
                r.condition,
                fmt_snr(r.snr_db),
                r.fold,
                r.threshold,
                m.f1_weighted,
                m.f1_hold,
                m.f1_shift,
                m.bal_acc,
                r.n_shift,
                r.n_hold,
                r.n_dropped
            );
        }
        for a in &self.aggregates {
            let m = &a.mean;
            let _ = writeln!(
                s,
                "{config_hash},aggregate,{},{},{},all,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
                a.metric_set.as_str(),
                a.condition,
                fmt_snr(a.snr_db),
                a.threshold,
                m.f1_weighted,
                m.f1_hold,
                m.f1_shift,
                m.bal_acc,
                a.f1_weighted_std,
                a.bal_acc_std,
                a.bal_acc_ci.0,
                a.bal_acc_ci.1,
                a.n_shift,
                a.n_hold,
                a.n_dropped
            );
        }
        s
    }
}

/// Concatenate report CSVs that share a header and a config hash.
pub fn merge_report_csvs<S: AsRef<str>>(reports: &[S]) -> Result<String> {
    let mut out = String::new();
    let mut hash: Option<String> = None;
    for (i, text) in reports.iter().enumerate() {
        let mut lines = text.as_ref().lines();
        let header = lines.next().ok_or(Error::Empty("report"))?;
        if i == 0 {
            out.push_str(header);
            out.push('\n');
        } else if !out.starts_with(header) {
            return Err(Error::invalid(format!("report {i} has a different header")));
        }
        for line in lines.filter(|l| !l.is_empty()) {
            let h = line.split(',').next().unwrap_or("");
            match &hash {
                None => hash = Some(h.to_string()),
                Some(prev) if prev != h => {
                    return Err(Error::invalid(format!(
                        "config hash mismatch: {prev} vs {h} in report {i}"
                    )))
                }
                _ => {}
            }
            out.push_str(line);
            out.push('\n');
        }
    }
    Ok(out)
}
