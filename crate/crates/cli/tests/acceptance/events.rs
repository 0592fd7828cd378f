use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use turncue::events::{extract_events, EventOptions, TurnKind, VadTrack};

use crate::Check;

const N_DYADS: usize = 1200;

/// Random two-speaker activity: alternating or repeated turns separated by
/// gaps or overlaps, with occasional short backchannels.
fn random_dyad(r: &mut ChaCha8Rng) -> VadTrack {
    let n = r.random_range(1500..4000);
    let mut vad = VadTrack::silent(n);
    let mut t: i64 = r.random_range(0..80);
    let mut speaker = r.random_range(0..2usize);
    while (t as usize) < n {
        let len = r.random_range(20..300);
        let start = t.max(0) as usize;
        let end = (start + len).min(n);
        vad.active[speaker][start..end].iter_mut().for_each(|a| *a = true);
        if r.random_bool(0.15) {
            let b0 = r.random_range(start..end.max(start + 1));
            let b1 = (b0 + r.random_range(5..40)).min(n);
            vad.active[1 - speaker][b0..b1].iter_mut().for_each(|a| *a = true);
        }
        t = end as i64 + r.random_range(-30..70);
        if r.random_bool(0.5) {
            speaker = 1 - speaker;
        }
    }
    vad
}

#[derive(Debug, PartialEq)]
struct Expected {
    shift: bool,
    start: usize,
    end: usize,
    prev: usize,
    next: usize,
}

/// Frame-by-frame scan of every mutual silence.
fn oracle(vad: &VadTrack, min_silence_frames: usize, context: usize) -> Vec<Expected> {
    let n = vad.active[0].len();
    let who = |i: usize| -> Option<usize> {
        match (vad.active[0][i], vad.active[1][i]) {
            (true, false) => Some(0),
            (false, true) => Some(1),
            _ => None,
        }
    };
    let silent = |i: usize| !vad.active[0][i] && !vad.active[1][i];
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !silent(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && silent(i) {
            i += 1;
        }
        let end = i;
        if start == 0 || end == n || end - start <= min_silence_frames {
            continue;
        }
        if start < context || end + context > n {
            continue;
        }
        let prev = who(start - 1);
        let next = who(end);
        let steady = |from: usize, to: usize, s: Option<usize>| (from..to).all(|j| who(j) == s);
        if prev.is_none() || next.is_none() || !steady(start - context, start, prev) || !steady(end, end + context, next) {
            continue;
        }
        let (prev, next) = (prev.unwrap(), next.unwrap());
        out.push(Expected {
            shift: prev != next,
            start,
            end,
            prev,
            next,
        });
    }
    out
}

pub fn brute_force() -> Check {
    let t = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let (mut n_events, mut n_shift) = (0, 0);
    for _ in 0..N_DYADS {
        let vad = random_dyad(&mut r);
        let min_frames = r.random_range(10..=30usize);
        let context = r.random_range(20..=150usize);
        let opts = EventOptions {
            min_silence_ms: min_frames as f64 * 10.0,
            context_s: context as f64 / 100.0,
        };
        let got: Vec<Expected> = extract_events(&vad, &opts)
            .into_iter()
            .map(|e| Expected {
                shift: e.kind == TurnKind::Shift,
                start: (e.silence_start_s * 100.0).round() as usize,
                end: (e.silence_end_s * 100.0).round() as usize,
                prev: usize::from(e.prev_speaker),
                next: usize::from(e.next_speaker),
            })
            .collect();
        let want = oracle(&vad, min_frames, context);
        n_events += want.len();
        n_shift += want.iter().filter(|e| e.shift).count();
        mismatches += usize::from(got != want);
    }
    Check::new(
        mismatches == 0 && n_shift > 0 && n_shift < n_events,
        format!("{N_DYADS} dyads, {n_events} events ({n_shift} shifts), {mismatches} mismatching dyads"),
    )
    .timed(t.elapsed(), Duration::from_secs(10))
}
