use crate::audio::{frame_levels_db, Waveform};
use crate::error::{Error, Result};
use crate::vocoder::{envelope_power, pink_envelope, synthesize, VocoderFrames};

use super::flatten::{group_means, match_intensity};
use super::{flatten_pitch, Scope};

/// Which prosodic contours the noise keeps from the original.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProsodyVariant {
    MatchBoth,
    FlatPitch,
    FlatIntensity,
    FlatBoth,
}

impl ProsodyVariant {
    pub fn from_flags(flat_pitch: bool, flat_intensity: bool) -> Self {
        match (flat_pitch, flat_intensity) {
            (false, false) => Self::MatchBoth,
            (true, false) => Self::FlatPitch,
            (false, true) => Self::FlatIntensity,
            (true, true) => Self::FlatBoth,
        }
    }

    fn flat_pitch(self) -> bool {
        matches!(self, Self::FlatPitch | Self::FlatBoth)
    }

    fn flat_intensity(self) -> bool {
        matches!(self, Self::FlatIntensity | Self::FlatBoth)
    }
}

/// Unintelligible noise carrying the original's pitch and loudness.
///
/// Every non-silent frame's envelope is replaced by a pink (1/f) shape of
/// the same power; F0 (optionally flattened) and aperiodicity are kept. The
/// synthesised signal is then gain-matched frame by frame to the original's
/// short-time level, or to its scope-mean level for the flat-intensity
/// variants. Frames where the original is below the energy floor are
/// silent in the output.
pub fn prosody_matched_noise(
    frames: &VocoderFrames,
    original: &Waveform,
    variant: ProsodyVariant,
    scope: &Scope,
    seed: u64,
) -> Result<Waveform> {
    let cfg = &frames.config;
    cfg.check_input(original)?;
    let hop = cfg.hop();
    let expected = cfg.frame_count(original.len());
    if frames.len() != expected {
        return Err(Error::FrameMismatch {
            what: "frames for original",
            expected,
            found: frames.len(),
        });
    }
    let mut noise_frames = if variant.flat_pitch() {
        flatten_pitch(frames, scope)
    } else {
        frames.clone()
    };
    let n_bins = cfg.n_bins();
    for i in 0..noise_frames.len() {
        if frames.is_silent(i) {
            continue;
        }
        let power = envelope_power(frames.envelope.frame(i));
        let pink = pink_envelope(n_bins, cfg.sample_rate_hz, power);
        noise_frames.envelope.frame_mut(i).copy_from_slice(&pink);
    }
    let synth = synthesize(&noise_frames, seed)?;
    let mut raw = synth.samples;
    raw.resize(original.len(), 0.0);

    let levels = frame_levels_db(&original.samples, hop);
    let active: Vec<bool> = levels.iter().map(|l| *l > cfg.energy_floor_db).collect();
    let target = if variant.flat_intensity() {
        let groups = scope.groups(levels.len(), cfg.frame_period_ms / 1000.0);
        group_means(&levels, &active, &groups)
    } else {
        levels
    };
    let samples = match_intensity(&raw, &target, &active, hop, 0.0);
    let mut out = Waveform::new(samples, original.sample_rate_hz)?;
    out.make_peak_safe();
    Ok(out)
}
