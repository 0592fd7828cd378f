use rand::seq::index::sample;

use crate::seed::rng;

use super::{MidTurnPoint, Occupancy, TurnEvent, TurnKind, VadTrack, VAD_FRAME_HZ};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidTurnOptions {
    pub margin_s: f64,
    pub stride_s: f64,
    /// Keep at most as many points as there are shifts.
    pub balance: bool,
}

impl Default for MidTurnOptions {
    fn default() -> Self {
        Self {
            margin_s: 2.0,
            stride_s: 1.0,
            balance: true,
        }
    }
}

/// Mid-turn reference points for S-Pred.
///
/// Points lie on a `stride_s` grid inside single-speaker stretches, at least
/// `margin_s` from either end of the stretch and from every event silence.
/// With `balance`, a seeded subsample keeps at most one point per shift.
pub fn sample_midturn(
    vad: &VadTrack,
    events: &[TurnEvent],
    opts: &MidTurnOptions,
    seed: u64,
) -> Vec<MidTurnPoint> {
    let margin = (opts.margin_s * VAD_FRAME_HZ).round() as usize;
    let stride = ((opts.stride_s * VAD_FRAME_HZ).round() as usize).max(1);
    let silences: Vec<(f64, f64)> = events
        .iter()
        .map(|e| (e.silence_start_s, e.silence_end_s))
        .collect();
    let clear_of_events = |t: f64| {
        silences.iter().all(|&(s, e)| {
            if t < s {
                s - t >= opts.margin_s - 1e-9
            } else if t > e {
                t - e >= opts.margin_s - 1e-9
            } else {
                false
            }
        })
    };

    let mut points = Vec::new();
    for (occ, start, end) in vad.runs() {
        let Occupancy::Single(speaker) = occ else {
            continue;
        };
        let mut f = start + margin;
        while f + margin <= end {
            let t = f as f64 / VAD_FRAME_HZ;
            if clear_of_events(t) {
                points.push(MidTurnPoint { t_s: t, speaker });
            }
            f += stride;
        }
    }

    let n_shifts = events.iter().filter(|e| e.kind == TurnKind::Shift).count();
    if opts.balance && points.len() > n_shifts {
        let mut keep = sample(&mut rng(seed), points.len(), n_shifts).into_vec();
        keep.sort_unstable();
        points = keep.into_iter().map(|i| points[i].clone()).collect();
    }
    points
}
