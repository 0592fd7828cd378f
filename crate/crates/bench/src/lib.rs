//! Shared fixtures for the benchmarks.

use rand::Rng;
use turncue::events::VadTrack;
use turncue::seed::rng;
use turncue::synth::{speech_like, SpeechSpec};
use turncue::Waveform;

/// Seeded speech-like audio of the given length.
pub fn speech(duration_s: f64, seed: u64) -> Waveform {
    speech_like(
        &SpeechSpec {
            duration_s,
            ..Default::default()
        },
        seed,
    )
    .wave
}

/// Alternating two-speaker activity at 100 Hz with random gaps and overlaps.
pub fn dyad(duration_s: f64, seed: u64) -> VadTrack {
    let n = (duration_s * 100.0) as usize;
    let mut r = rng(seed);
    let mut vad = VadTrack::silent(n);
    let mut t = 0usize;
    let mut speaker = 0;
    while t < n {
        let end = (t + r.random_range(50..600)).min(n);
        vad.active[speaker][t..end].iter_mut().for_each(|a| *a = true);
        t = (end + r.random_range(0..80)).saturating_sub(20);
        if r.random_bool(0.6) {
            speaker = 1 - speaker;
        }
    }
    vad
}
