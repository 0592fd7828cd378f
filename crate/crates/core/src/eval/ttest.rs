use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

use super::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestKind {
    Paired,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub kind: TTestKind,
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
    /// Zero standard error with unequal means: t is infinite and p is 0.
    pub degenerate: bool,
}

fn student_t(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("df > 0")
}

fn finish(kind: TTestKind, diff: f64, se: f64, df: f64) -> TTest {
    let scale = diff.abs().max(f64::MIN_POSITIVE);
    if se <= 1e-12 * scale || se == 0.0 {
        if diff.abs() <= 1e-12 {
            return TTest { kind, t: 0.0, df, p: 1.0, degenerate: false };
        }
        log::warn!("t-test with zero variance and mean difference {diff}");
        return TTest {
            kind,
            t: diff.signum() * f64::INFINITY,
            df,
            p: 0.0,
            degenerate: true,
        };
    }
    let t = diff / se;
    let p = (2.0 * student_t(df).sf(t.abs())).min(1.0);
    TTest { kind, t, df, p, degenerate: false }
}

/// Paired t-test when the lists have equal length (fold-for-fold), Welch's
/// unequal-variance test otherwise.
pub fn fold_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("t-test needs at least two values per side"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("t-test inputs must be finite"));
    }
    if a.len() == b.len() {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let n = d.len() as f64;
        Ok(finish(TTestKind::Paired, mean(&d), std_dev(&d) / n.sqrt(), n - 1.0))
    } else {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (va, vb) = (std_dev(a).powi(2) / na, std_dev(b).powi(2) / nb);
        let se = (va + vb).sqrt();
        let df = if va + vb > 0.0 {
            (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0))
        } else {
            na + nb - 2.0
        };
        Ok(finish(TTestKind::Welch, mean(a) - mean(b), se, df))
    }
}

/// Mean and t-based 95% interval with n-1 degrees of freedom. A single
/// value gives a zero-width interval.
pub fn confidence_interval_95(xs: &[f64]) -> (f64, f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, m, m);
    }
    let n = xs.len() as f64;
    let half = student_t(n - 1.0).inverse_cdf(0.975) * std_dev(xs) / n.sqrt();
    (m, m - half, m + half)
}
