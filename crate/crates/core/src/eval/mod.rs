//! Evaluation of external turn-taking predictors.
//!
//! A predictor is represented only by its per-session `p_shift` stream.
//! Events are scored by summing the stream over a short window, a
//! threshold is tuned on validation sessions, and test-set F1 / balanced
//! accuracy are reported per condition, SNR and fold.

mod figure;
mod metrics;
mod report;
mod score;
mod stream;
mod threshold;
mod ttest;
mod wer;

pub use figure::{figure_csv, figure_from_report, figure_from_wer, FigurePoint, WerObservation};
pub use metrics::{classification_metrics, ClassMetrics, Confusion};
pub use report::{build_report, merge_report_csvs, AggregateRow, EvalReport, FoldInput, FoldRow, MetricSet};
pub use score::{score_session, score_window, Anchor, EventClass, ScoredEvent};
pub use stream::{shift_probability, ProbabilityStream};
pub use threshold::{balanced_accuracy_at, threshold_grid, tune_threshold, Threshold};
pub use ttest::{confidence_interval_95, fold_ttest, TTest, TTestKind};
pub use wer::{edit_counts, edit_distance, normalize_tokens, wer, EditCounts};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1); 0 for fewer than two values.
pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
