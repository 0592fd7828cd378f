use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct MixAssignment {
    pub session_id: String,
    pub condition: String,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// Per-session training condition for a mixed clean/manipulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct MixPlan {
    pub assignments: Vec<MixAssignment>,
    pub clean_fraction: f64,
    pub seed: u64,
}

impl MixPlan {
    pub fn manipulated_fraction(&self) -> f64 {
        1.0 - self.clean_fraction
    }

    pub fn n_manipulated(&self) -> usize {
        self.assignments.iter().filter(|a| a.condition != "clean").count()
    }

    /// `session_id,condition,snr_db,seed`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("session_id,condition,snr_db,seed\n");
        for a in &self.assignments {
            let snr = a.snr_db.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(s, "{},{},{snr},{}", a.session_id, a.condition, a.seed);
        }
        s
    }
}

/// Demote `round((1 - clean_fraction) * n)` sessions to `condition`.
///
/// Sessions are ranked by a hash of (seed, session id), so the assignment
/// does not depend on input order. Manipulated sessions get 0 dB SNR when
/// `condition_has_noise`.
pub fn plan_mixed_training(
    sessions: &[String],
    clean_fraction: f64,
    condition: &str,
    condition_has_noise: bool,
    seed: u64,
) -> Result<MixPlan> {
    if sessions.is_empty() {
        return Err(Error::Empty("session list"));
    }
    if !(clean_fraction > 0.0 && clean_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "clean fraction must lie strictly between 0 and 1, got {clean_fraction}"
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = sessions.iter().find(|s| !seen.insert(s.as_str())) {
        return Err(Error::invalid(format!("duplicate session id {dup:?}")));
    }
    let n_manip = ((1.0 - clean_fraction) * sessions.len() as f64).round() as usize;
    let mut ranked: Vec<(u64, &str)> = sessions.iter().map(|s| (derive_seed(seed, s), s.as_str())).collect();
    ranked.sort();
    let demoted: HashSet<&str> = ranked.iter().take(n_manip).map(|(_, s)| *s).collect();
    let assignments = sessions
        .iter()
        .map(|s| {
            let manip = demoted.contains(s.as_str());
            MixAssignment {
                session_id: s.clone(),
                condition: if manip { condition.to_string() } else { "clean".to_string() },
                snr_db: (manip && condition_has_noise).then_some(0.0),
                seed: derive_seed(seed, s),
            }
        })
        .collect();
    Ok(MixPlan {
        assignments,
        clean_fraction,
        seed,
    })
}
