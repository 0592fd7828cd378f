use super::{Occupancy, TurnEvent, TurnKind, VadTrack, VAD_FRAME_HZ};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOptions {
    /// Mutual silences must be strictly longer than this.
    pub min_silence_ms: f64,
    /// Single-speaker context required on both sides of the silence.
    pub context_s: f64,
}

impl Default for EventOptions {
    fn default() -> Self {
        Self {
            min_silence_ms: 200.0,
            context_s: 1.0,
        }
    }
}

/// Shifts and holds at mutual silences.
///
/// A silence qualifies when it is longer than `min_silence_ms` and is
/// flanked by at least `context_s` of exactly one active speaker on each
/// side. The event is a shift when the speakers differ and a hold
/// otherwise. Silences touching the session boundaries never qualify.
pub fn extract_events(vad: &VadTrack, opts: &EventOptions) -> Vec<TurnEvent> {
    let context = (opts.context_s * VAD_FRAME_HZ).round() as usize;
    let frame_ms = 1000.0 / VAD_FRAME_HZ;
    let runs = vad.runs();
    let mut events = Vec::new();
    for j in 1..runs.len().saturating_sub(1) {
        let (occ, start, end) = runs[j];
        if occ != Occupancy::Silence || (end - start) as f64 * frame_ms <= opts.min_silence_ms {
            continue;
        }
        let (before, b0, b1) = runs[j - 1];
        let (after, a0, a1) = runs[j + 1];
        let (Occupancy::Single(prev), Occupancy::Single(next)) = (before, after) else {
            continue;
        };
        if b1 - b0 < context || a1 - a0 < context {
            continue;
        }
        events.push(TurnEvent {
            kind: if prev == next { TurnKind::Hold } else { TurnKind::Shift },
            silence_start_s: start as f64 / VAD_FRAME_HZ,
            silence_end_s: end as f64 / VAD_FRAME_HZ,
            prev_speaker: prev,
            next_speaker: next,
        });
    }
    events
}
