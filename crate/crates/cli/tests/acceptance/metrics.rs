use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;
use turncue::eval::{classification_metrics, edit_counts, fold_ttest, tune_threshold, wer, TTestKind};

use crate::Check;

const CASES: usize = 200;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn labels(r: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    loop {
        let p = r.random_range(0.1..0.9);
        let y: Vec<bool> = (0..n).map(|_| r.random_bool(p)).collect();
        if y.iter().any(|v| *v) && !y.iter().all(|v| *v) {
            return y;
        }
    }
}

/// Precision/recall definitions per class, F1 as their harmonic mean.
fn metrics_oracle(pred: &[bool], truth: &[bool]) -> [f64; 4] {
    let count = |p: bool, t: bool| pred.iter().zip(truth).filter(|(a, b)| **a == p && **b == t).count() as f64;
    let per_class = |c: bool| {
        let hit = count(c, c);
        let precision = if hit + count(c, !c) > 0.0 { hit / (hit + count(c, !c)) } else { 0.0 };
        let recall = hit / (hit + count(!c, c));
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        (f1, recall)
    };
    let (f1_shift, rec_shift) = per_class(true);
    let (f1_hold, rec_hold) = per_class(false);
    let n = truth.len() as f64;
    let support = truth.iter().filter(|t| **t).count() as f64;
    let weighted = (support * f1_shift + (n - support) * f1_hold) / n;
    [weighted, f1_hold, f1_shift, 0.5 * (rec_shift + rec_hold)]
}

fn check_classification(r: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for _ in 0..CASES {
        let n = r.random_range(2..300);
        let truth = labels(r, n);
        let flip = r.random_range(0.0..1.0);
        let pred: Vec<bool> = truth.iter().map(|t| if r.random_bool(flip) { !t } else { *t }).collect();
        let m = classification_metrics(&pred, &truth).unwrap();
        let want = metrics_oracle(&pred, &truth);
        let got = [m.f1_weighted, m.f1_hold, m.f1_shift, m.bal_acc];
        // Balanced accuracy to 1e-12, F1 scores to 1e-9.
        let ok = got.iter().zip(&want).enumerate().all(|(i, (g, w))| close(*g, *w, if i == 3 { 1e-12 } else { 1e-9 }));
        bad += usize::from(!ok);
    }
    bad
}

/// Memoised recursion over the full (n+1) x (m+1) table.
fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == 0 {
            j
        } else if j == 0 {
            i
        } else {
            let sub = go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]);
            let del = go(a, b, i - 1, j, memo) + 1;
            let ins = go(a, b, i, j - 1, memo) + 1;
            sub.min(del).min(ins)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, a.len(), b.len(), &mut memo)
}

fn check_wer(r: &mut ChaCha8Rng) -> usize {
    const VOCAB: [&str; 6] = ["yeah", "so", "the", "um", "right", "okay"];
    let mut bad = 0;
    for _ in 0..CASES {
        let n = r.random_range(1..40);
        let reference: Vec<u8> = (0..n).map(|_| r.random_range(0..VOCAB.len() as u8)).collect();
        let hypothesis: Vec<u8> = (0..r.random_range(0..50))
            .map(|i| {
                if i < reference.len() && r.random_bool(0.6) {
                    reference[i]
                } else {
                    r.random_range(0..VOCAB.len() as u8)
                }
            })
            .collect();
        let words = |v: &[u8]| v.iter().map(|i| VOCAB[*i as usize]).collect::<Vec<&str>>();
        let d = levenshtein(&reference, &hypothesis);
        let got = wer(&words(&reference), &words(&hypothesis)).unwrap();
        let counts = edit_counts(&reference, &hypothesis);
        let ok = close(got, d as f64 / n as f64, 1e-12) && counts.total() == d;
        bad += usize::from(!ok);
    }
    bad
}

fn check_threshold(r: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for case in 0..CASES {
        let n = r.random_range(2..200);
        let y = labels(r, n);
        let scores: Vec<f64> = y
            .iter()
            .map(|p| {
                let s: f64 = r.random_range(0.0..2.0) + if *p { r.random_range(0.0..1.5) } else { 0.0 };
                // Some cases use coarse scores to exercise ties and grid hits.
                if case % 3 == 0 {
                    (s * 4.0).round() / 4.0
                } else {
                    s
                }
            })
            .collect();
        let max = scores.iter().copied().fold(0.0, f64::max);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=100 {
            let thr = max * i as f64 / 100.0;
            let tpr = y.iter().zip(&scores).filter(|(t, s)| **t && **s >= thr).count() as f64
                / y.iter().filter(|t| **t).count() as f64;
            let tnr = y.iter().zip(&scores).filter(|(t, s)| !**t && **s < thr).count() as f64
                / y.iter().filter(|t| !**t).count() as f64;
            let ba = 0.5 * (tpr + tnr);
            if ba > best.0 {
                best = (ba, thr);
            }
        }
        let got = tune_threshold(&scores, &y).unwrap();
        let ok = close(got.balanced_accuracy, best.0, 1e-12) && close(got.value, best.1, 1e-12);
        bad += usize::from(!ok);
    }
    bad
}

fn t_pdf(x: f64, df: f64) -> f64 {
    let c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Two-sided p from composite Simpson integration of the density on [0, |t|].
fn two_sided_p(t: f64, df: f64) -> f64 {
    let a = t.abs();
    let steps = 20_000;
    let h = a / steps as f64;
    let mut s = t_pdf(0.0, df) + t_pdf(a, df);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * t_pdf(i as f64 * h, df);
    }
    1.0 - 2.0 * s * h / 3.0
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn check_ttest(r: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for case in 0..CASES {
        let paired = case % 2 == 0;
        let nb = if paired { 5 } else { r.random_range(2..9usize) };
        let nb = if !paired && nb == 5 { 6 } else { nb };
        let shift = r.random_range(-0.1..0.1);
        let a: Vec<f64> = (0..5).map(|_| r.random_range(0.5..0.9)).collect();
        let b: Vec<f64> = (0..nb).map(|_| r.random_range(0.5..0.9) + shift).collect();
        let (t, df, kind) = if paired {
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let (m, v) = mean_var(&d);
            (m / (v / 5.0).sqrt(), 4.0, TTestKind::Paired)
        } else {
            let ((ma, va), (mb, vb)) = (mean_var(&a), mean_var(&b));
            let (sa, sb) = (va / 5.0, vb / nb as f64);
            let df = (sa + sb).powi(2) / (sa * sa / 4.0 + sb * sb / (nb as f64 - 1.0));
            ((ma - mb) / (sa + sb).sqrt(), df, TTestKind::Welch)
        };
        let got = fold_ttest(&a, &b).unwrap();
        let ok = got.kind == kind && close(got.t, t, 1e-9) && close(got.df, df, 1e-9) && close(got.p, two_sided_p(t, df), 1e-9);
        bad += usize::from(!ok);
    }
    bad
}

pub fn oracles() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let bad = [
        ("classification_metrics", check_classification(&mut r)),
        ("wer", check_wer(&mut r)),
        ("tune_threshold", check_threshold(&mut r)),
        ("fold_ttest", check_ttest(&mut r)),
    ];
    let detail: Vec<String> = bad.iter().map(|(n, b)| format!("{n} {b}/{CASES} off")).collect();
    Check::new(bad.iter().all(|(_, b)| *b == 0), detail.join(", "))
}
