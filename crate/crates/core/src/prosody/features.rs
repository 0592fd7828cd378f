use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::events::VadTrack;
use crate::vocoder::VocoderFrames;

pub const N_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "voiced_ratio",
    "f0_mean_st",
    "f0_slope_st_per_s",
    "f0_final_delta_st",
    "intensity_mean_db",
    "intensity_slope_db_per_s",
    "intensity_final_delta_db",
    "pause_fraction",
    "window_covered_s",
];

/// Trailing analysis window.
pub const DEFAULT_WINDOW_S: f64 = 2.0;

/// Length of the turn-final stretch compared against the rest of the window.
const FINAL_S: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProsodyFeatures(pub [f64; N_FEATURES]);

impl ProsodyFeatures {
    pub fn voiced_ratio(&self) -> f64 {
        self.0[0]
    }
    pub fn f0_mean_st(&self) -> f64 {
        self.0[1]
    }
    pub fn f0_slope(&self) -> f64 {
        self.0[2]
    }
    pub fn f0_final_delta(&self) -> f64 {
        self.0[3]
    }
    pub fn intensity_mean_db(&self) -> f64 {
        self.0[4]
    }
    pub fn intensity_slope(&self) -> f64 {
        self.0[5]
    }
    pub fn intensity_final_delta(&self) -> f64 {
        self.0[6]
    }
    pub fn pause_fraction(&self) -> f64 {
        self.0[7]
    }
    pub fn covered_s(&self) -> f64 {
        self.0[8]
    }
}

/// Least-squares slope of `y` against `x`; 0 with fewer than two distinct x.
fn ls_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return 0.0;
    }
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

fn mean_of(points: &[(f64, f64)]) -> f64 {
    points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64
}

/// Mean, slope, and (final stretch mean minus earlier mean) of a contour.
fn summarise(points: &[(f64, f64)], final_from: f64) -> (f64, f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let (late, early): (Vec<(f64, f64)>, Vec<(f64, f64)>) = points.iter().partition(|p| p.0 >= final_from);
    let delta = if late.is_empty() || early.is_empty() {
        0.0
    } else {
        mean_of(&late) - mean_of(&early)
    };
    (mean_of(points), ls_slope(points), delta)
}

/// Feature extraction for one speaker's channel of a session.
#[derive(Debug, Clone)]
pub struct FeatureExtractor<'a> {
    frames: &'a VocoderFrames,
    vad: &'a VadTrack,
    channel: usize,
    /// Median voiced F0 of the whole channel (semitone reference).
    reference_hz: f64,
    levels_db: Vec<f64>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(frames: &'a VocoderFrames, vad: &'a VadTrack, channel: u8) -> Result<Self> {
        if channel > 1 {
            return Err(Error::invalid(format!("channel {channel} out of range")));
        }
        let mut voiced: Vec<f64> = frames.f0.voiced_values().collect();
        voiced.sort_by(f64::total_cmp);
        let reference_hz = if voiced.is_empty() {
            0.0
        } else if voiced.len() % 2 == 1 {
            voiced[voiced.len() / 2]
        } else {
            0.5 * (voiced[voiced.len() / 2 - 1] + voiced[voiced.len() / 2])
        };
        Ok(Self {
            frames,
            vad,
            channel: usize::from(channel),
            reference_hz,
            levels_db: frames.levels_db(),
        })
    }

    pub fn reference_hz(&self) -> f64 {
        self.reference_hz
    }

    fn speaking(&self, i: usize) -> bool {
        self.vad.active[self.channel].get(i).copied().unwrap_or(false)
    }

    /// Features over the frames centred in `[t_s - window_s, t_s)`.
    pub fn extract(&self, t_s: f64, window_s: f64) -> Result<ProsodyFeatures> {
        let frame_s = self.frames.config.frame_period_ms / 1000.0;
        let n = self.frames.len();
        if !(window_s > 0.0) || !t_s.is_finite() {
            return Err(Error::invalid("window must be positive and time finite"));
        }
        let lo = ((t_s - window_s) / frame_s - 1e-9).ceil().max(0.0) as usize;
        let hi = ((t_s / frame_s - 1e-9).ceil().max(0.0) as usize).min(n);
        if hi <= lo {
            return Err(Error::WindowOutOfRange {
                start_s: t_s - window_s,
                end_s: t_s,
            });
        }
        let final_from = t_s - FINAL_S;
        let f0 = &self.frames.f0.f0_hz;
        let pitch: Vec<(f64, f64)> = if self.reference_hz > 0.0 {
            (lo..hi)
                .filter(|&i| f0[i] > 0.0)
                .map(|i| (i as f64 * frame_s, 12.0 * (f0[i] / self.reference_hz).log2()))
                .collect()
        } else {
            Vec::new()
        };
        let level: Vec<(f64, f64)> = (lo..hi)
            .filter(|&i| self.speaking(i) && !self.frames.is_silent(i))
            .map(|i| (i as f64 * frame_s, self.levels_db[i]))
            .collect();
        let count = (hi - lo) as f64;
        let (f0_mean, f0_slope, f0_delta) = summarise(&pitch, final_from);
        let (int_mean, int_slope, int_delta) = summarise(&level, final_from);
        let pauses = (lo..hi).filter(|&i| !self.speaking(i)).count() as f64;
        Ok(ProsodyFeatures([
            pitch.len() as f64 / count,
            f0_mean,
            f0_slope,
            f0_delta,
            int_mean,
            int_slope,
            int_delta,
            pauses / count,
            count * frame_s,
        ]))
    }
}

/// Features as CSV with a leading label column.
pub fn features_csv(rows: &[(String, ProsodyFeatures)]) -> String {
    let mut s = String::from("label");
    for name in FEATURE_NAMES {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (label, f) in rows {
        s.push_str(label);
        for v in f.0 {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}
