//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod events;
mod harness;
mod metrics;
mod prosody;
mod signal;

use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Outcome of one criterion.
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    /// Also fail when `elapsed` exceeds `limit`.
    pub fn timed(self, elapsed: Duration, limit: Duration) -> Self {
        let within = elapsed <= limit;
        Self {
            pass: self.pass && within,
            detail: format!("{}; {:.1}s (limit {}s)", self.detail, elapsed.as_secs_f64(), limit.as_secs()),
        }
    }
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "vocoder round trip", signal::round_trip),
        (2, "prosody-matched noise", signal::prosody_noise),
        (3, "flattening", signal::flattening),
        (4, "SNR calibration", signal::snr_calibration),
        (5, "pink noise slope", signal::pink_slope),
        (6, "event extraction vs brute force", events::brute_force),
        (7, "metric oracles", metrics::oracles),
        (8, "end-to-end harness", harness::end_to_end),
        (9, "prosody-only predictor", prosody::predictor),
        (10, "selftest determinism", harness::determinism),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    let start = Instant::now();
    for (n, name, f) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let check = match std::panic::catch_unwind(f) {
            Ok(c) => c,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Check::new(false, format!("panicked: {msg}"))
            }
        };
        let tag = if check.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {n:>2} {name}: {} ({:.1}s)", check.detail, t.elapsed().as_secs_f64());
        failed += usize::from(!check.pass);
    }
    println!("acceptance: {failed} failing, {:.1}s total", start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
