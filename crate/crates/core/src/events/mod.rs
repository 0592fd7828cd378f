//! Voice activity from word timings, shift/hold events, mid-turn samples and
//! future-activity labels.
//!
//! Activity is tracked at 100 Hz: frame `i` covers `[i/100, (i+1)/100)` s.

mod extract;
mod labels;
mod midturn;
mod words;

pub use extract::{extract_events, EventOptions};
pub use labels::{downsample_activity, future_activity_labels, FutureActivityLabels, LABEL_FRAME_HZ, LABEL_HORIZON};
pub use midturn::{sample_midturn, MidTurnOptions};
pub use words::{ipu_segments, parse_ctm, parse_jsonl, read_words, words_to_vad, WordToken};

use std::fmt::Write as _;

/// Internal activity resolution.
pub const VAD_FRAME_HZ: f64 = 100.0;

/// Two-channel activity at [`VAD_FRAME_HZ`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VadTrack {
    pub active: [Vec<bool>; 2],
}

/// Which speakers are active in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Occupancy {
    Silence,
    Single(u8),
    Overlap,
}

impl VadTrack {
    pub fn silent(n_frames: usize) -> Self {
        Self {
            active: [vec![false; n_frames], vec![false; n_frames]],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.active[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_frames() as f64 / VAD_FRAME_HZ
    }

    pub(crate) fn occupancy(&self, i: usize) -> Occupancy {
        match (self.active[0][i], self.active[1][i]) {
            (false, false) => Occupancy::Silence,
            (true, false) => Occupancy::Single(0),
            (false, true) => Occupancy::Single(1),
            (true, true) => Occupancy::Overlap,
        }
    }

    /// Maximal runs of constant occupancy as `(occupancy, start, end)`.
    pub(crate) fn runs(&self) -> Vec<(Occupancy, usize, usize)> {
        let mut runs = Vec::new();
        let n = self.n_frames();
        let mut start = 0;
        while start < n {
            let occ = self.occupancy(start);
            let mut end = start + 1;
            while end < n && self.occupancy(end) == occ {
                end += 1;
            }
            runs.push((occ, start, end));
            start = end;
        }
        runs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TurnKind {
    Shift,
    Hold,
}

impl TurnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TurnKind::Shift => "shift",
            TurnKind::Hold => "hold",
        }
    }
}

/// A shift or hold anchored at the onset of a mutual silence.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnEvent {
    pub kind: TurnKind,
    pub silence_start_s: f64,
    pub silence_end_s: f64,
    pub prev_speaker: u8,
    pub next_speaker: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MidTurnPoint {
    pub t_s: f64,
    pub speaker: u8,
}

/// `session_id,kind,silence_start,silence_end,prev,next`
pub fn events_csv(rows: &[(String, Vec<TurnEvent>)]) -> String {
    let mut s = String::from("session_id,kind,silence_start,silence_end,prev,next\n");
    for (id, events) in rows {
        for e in events {
            let _ = writeln!(
                s,
                "{id},{},{:.3},{:.3},{},{}",
                e.kind.as_str(),
                e.silence_start_s,
                e.silence_end_s,
                e.prev_speaker,
                e.next_speaker
            );
        }
    }
    s
}

/// `session_id,t,speaker`
pub fn midturn_csv(rows: &[(String, Vec<MidTurnPoint>)]) -> String {
    let mut s = String::from("session_id,t,speaker\n");
    for (id, points) in rows {
        for p in points {
            let _ = writeln!(s, "{id},{:.3},{}", p.t_s, p.speaker);
        }
    }
    s
}
