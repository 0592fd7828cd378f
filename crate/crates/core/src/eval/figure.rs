use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{confidence_interval_95, mean, EvalReport};

/// One point of a long-format figure series.
#[derive(Debug, Clone, PartialEq)]
pub struct FigurePoint {
    pub series: String,
    pub x: Option<f64>,
    pub y: f64,
    /// Value before clamping (equals `y` for balanced accuracy).
    pub y_raw: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Balanced accuracy per (condition, SNR) aggregate.
pub fn figure_from_report(report: &EvalReport) -> Result<Vec<FigurePoint>> {
    if report.aggregates.is_empty() {
        return Err(Error::Empty("report"));
    }
    let mut points: Vec<FigurePoint> = report
        .aggregates
        .iter()
        .map(|a| FigurePoint {
            series: format!("{}:{}", a.metric_set.as_str(), a.condition),
            x: a.snr_db,
            y: a.mean.bal_acc,
            y_raw: a.mean.bal_acc,
            ci_low: a.bal_acc_ci.0,
            ci_high: a.bal_acc_ci.1,
        })
        .collect();
    sort_points(&mut points);
    Ok(points)
}

/// A per-item WER measurement (one speaker or utterance).
#[derive(Debug, Clone, PartialEq)]
pub struct WerObservation {
    pub series: String,
    pub snr_db: Option<f64>,
    pub wer: f64,
}

/// Mean WER per (series, SNR). `y` and its interval use values clamped to
/// 1; `y_raw` is the unclamped mean.
pub fn figure_from_wer(obs: &[WerObservation]) -> Result<Vec<FigurePoint>> {
    if obs.is_empty() {
        return Err(Error::Empty("WER table"));
    }
    let mut keys: Vec<(String, Option<u64>)> = Vec::new();
    for o in obs {
        let k = (o.series.clone(), o.snr_db.map(f64::to_bits));
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut points: Vec<FigurePoint> = keys
        .into_iter()
        .map(|(series, snr)| {
            let raw: Vec<f64> = obs
                .iter()
                .filter(|o| o.series == series && o.snr_db.map(f64::to_bits) == snr)
                .map(|o| o.wer)
                .collect();
            let clamped: Vec<f64> = raw.iter().map(|w| w.min(1.0)).collect();
            let (y, lo, hi) = confidence_interval_95(&clamped);
            FigurePoint {
                series,
                x: snr.map(f64::from_bits),
                y,
                y_raw: mean(&raw),
                ci_low: lo.max(0.0),
                ci_high: hi.min(1.0),
            }
        })
        .collect();
    sort_points(&mut points);
    Ok(points)
}

/// Series in first-appearance order, x ascending within a series (no-SNR
/// points first).
fn sort_points(points: &mut [FigurePoint]) {
    let mut order: Vec<String> = Vec::new();
    for p in points.iter() {
        if !order.contains(&p.series) {
            order.push(p.series.clone());
        }
    }
    points.sort_by(|a, b| {
        let ia = order.iter().position(|s| *s == a.series);
        let ib = order.iter().position(|s| *s == b.series);
        ia.cmp(&ib).then_with(|| match (a.x, b.x) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
            (Some(x), Some(y)) => x.total_cmp(&y),
        })
    });
}

/// `config_hash,series,x,y,y_raw,ci_low,ci_high`
pub fn figure_csv(points: &[FigurePoint], config_hash: &str) -> String {
    let mut s = String::from("config_hash,series,x,y,y_raw,ci_low,ci_high\n");
    for p in points {
        let x = p.x.map(|x| format!("{x}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{config_hash},{},{x},{:.6},{:.6},{:.6},{:.6}",
            p.series, p.y, p.y_raw, p.ci_low, p.ci_high
        );
    }
    s
}
