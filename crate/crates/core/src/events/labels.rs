use super::VadTrack;

/// Label frame rate.
pub const LABEL_FRAME_HZ: f64 = 20.0;
/// Future bins per label frame (2 s at 20 Hz).
pub const LABEL_HORIZON: usize = 40;
const VAD_FRAMES_PER_BIN: usize = 5;

/// Binary future-activity targets: for each 20 Hz frame `t`, two channels
/// by [`LABEL_HORIZON`] bins, where bin `k` is the activity in
/// `(t + k*50ms, t + (k+1)*50ms]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureActivityLabels {
    pub frame_hz: f64,
    pub horizon: usize,
    /// Frame-major, then channel, then bin.
    pub active: Vec<bool>,
    /// False where the horizon runs past the end of the session.
    pub valid: Vec<bool>,
}

impl FutureActivityLabels {
    pub fn n_frames(&self) -> usize {
        self.valid.len()
    }

    pub fn get(&self, frame: usize, channel: usize, bin: usize) -> bool {
        self.active[(frame * 2 + channel) * self.horizon + bin]
    }
}

/// 100 Hz activity to 50 ms bins: a bin is active when at least half of its
/// five frames are.
pub fn downsample_activity(vad: &VadTrack) -> [Vec<bool>; 2] {
    vad.active.clone().map(|ch| {
        ch.chunks(VAD_FRAMES_PER_BIN)
            .map(|c| 2 * c.iter().filter(|a| **a).count() >= VAD_FRAMES_PER_BIN)
            .collect()
    })
}

pub fn future_activity_labels(vad: &VadTrack) -> FutureActivityLabels {
    let bins = downsample_activity(vad);
    let n = bins[0].len();
    let h = LABEL_HORIZON;
    let mut active = vec![false; n * 2 * h];
    let mut valid = vec![false; n];
    for t in 0..n {
        valid[t] = t + h <= n;
        for (c, ch) in bins.iter().enumerate() {
            for k in 0..h.min(n - t) {
                active[(t * 2 + c) * h + k] = ch[t + k];
            }
        }
    }
    FutureActivityLabels {
        frame_hz: LABEL_FRAME_HZ,
        horizon: h,
        active,
        valid,
    }
}
