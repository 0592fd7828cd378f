use crate::error::{Error, Result};
use crate::events::{MidTurnPoint, TurnEvent, TurnKind};

use super::ProbabilityStream;

/// Where the scoring window sits relative to the anchor time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    /// `[t - window, t)`: the last speech before the silence.
    #[default]
    PreSilence,
    /// `[t, t + window)`: the start of the silence.
    InSilence,
}

impl Anchor {
    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::PreSilence => "pre-silence",
            Anchor::InSilence => "in-silence",
        }
    }
}

impl std::str::FromStr for Anchor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre-silence" => Ok(Anchor::PreSilence),
            "in-silence" => Ok(Anchor::InSilence),
            _ => Err(Error::invalid(format!("unknown anchor {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventClass {
    Shift,
    Hold,
    MidTurn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEvent {
    pub session_id: String,
    pub time_s: f64,
    pub score: f64,
    pub class: EventClass,
}

/// Sum of `p_shift` over the frames whose timestamps fall in the window.
pub fn score_window(stream: &ProbabilityStream, t: f64, window_ms: f64, anchor: Anchor) -> Result<f64> {
    let rate = stream.frame_rate_hz;
    let n_win = (window_ms * rate / 1000.0).round() as isize;
    let pos = ((t - stream.start_s) * rate - 1e-6).ceil() as isize;
    let (lo, hi) = match anchor {
        Anchor::PreSilence => (pos - n_win, pos),
        Anchor::InSilence => (pos, pos + n_win),
    };
    if n_win <= 0 || lo < 0 || hi > stream.len() as isize {
        return Err(Error::WindowOutOfRange {
            start_s: stream.time_of(0) + lo as f64 / rate,
            end_s: stream.time_of(0) + hi as f64 / rate,
        });
    }
    Ok(stream.p_shift[lo as usize..hi as usize].iter().sum())
}

/// Score every event (at its silence onset) and mid-turn point (at its
/// time). Returns the scored items and the number dropped because the
/// window did not fit the stream.
pub fn score_session(
    session_id: &str,
    stream: &ProbabilityStream,
    events: &[TurnEvent],
    midturn: &[MidTurnPoint],
    window_ms: f64,
    anchor: Anchor,
) -> (Vec<ScoredEvent>, usize) {
    let items = events
        .iter()
        .map(|e| {
            let class = match e.kind {
                TurnKind::Shift => EventClass::Shift,
                TurnKind::Hold => EventClass::Hold,
            };
            (e.silence_start_s, class)
        })
        .chain(midturn.iter().map(|m| (m.t_s, EventClass::MidTurn)));
    let mut scored = Vec::new();
    let mut dropped = 0;
    for (t, class) in items {
        match score_window(stream, t, window_ms, anchor) {
            Ok(score) => scored.push(ScoredEvent {
                session_id: session_id.to_string(),
                time_s: t,
                score,
                class,
            }),
            Err(e) => {
                log::debug!("{session_id}: dropping event at {t:.2}s: {e}");
                dropped += 1;
            }
        }
    }
    (scored, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream_200ms_at_20hz() {
        let s = ProbabilityStream::constant(20.0, 100, 0.5).unwrap();
        assert_eq!(score_window(&s, 2.0, 200.0, Anchor::PreSilence).unwrap(), 2.0);
    }

    #[test]
    fn only_window_frames_count() {
        let mut p = vec![1.0; 100];
        // frames 36..40 cover [1.8, 2.0)
        p[36..40].iter_mut().for_each(|v| *v = 0.25);
        let s = ProbabilityStream::new(20.0, 0.0, p).unwrap();
        assert_eq!(score_window(&s, 2.0, 200.0, Anchor::PreSilence).unwrap(), 1.0);
        assert_eq!(score_window(&s, 1.8, 200.0, Anchor::InSilence).unwrap(), 1.0);
    }

    #[test]
    fn frame_count_follows_rate() {
        let s = ProbabilityStream::constant(10.0, 50, 1.0).unwrap();
        assert_eq!(score_window(&s, 2.0, 200.0, Anchor::PreSilence).unwrap(), 2.0);
    }

    #[test]
    fn out_of_range_windows_are_dropped() {
        let s = ProbabilityStream::constant(20.0, 40, 0.5).unwrap();
        assert!(score_window(&s, 0.1, 200.0, Anchor::PreSilence).is_err());
        assert!(score_window(&s, 1.95, 200.0, Anchor::InSilence).is_err());
        let ev = TurnEvent {
            kind: TurnKind::Shift,
            silence_start_s: 0.1,
            silence_end_s: 0.5,
            prev_speaker: 0,
            next_speaker: 1,
        };
        let (scored, dropped) = score_session("s", &s, &[ev], &[], 200.0, Anchor::PreSilence);
        assert!(scored.is_empty());
        assert_eq!(dropped, 1);
    }
}
