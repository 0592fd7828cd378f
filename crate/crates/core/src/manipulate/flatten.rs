use crate::audio::{frame_levels_db, owner_frame, Waveform, PIPELINE_SAMPLE_RATE};
use crate::error::Result;
use crate::vocoder::{VocoderConfig, VocoderFrames};

use super::Scope;

/// Frames averaged when smoothing the gain contour (50 ms at 10 ms hops).
const GAIN_SMOOTH_FRAMES: usize = 5;
/// Per-frame gain limit in dB.
const MAX_GAIN_DB: f64 = 40.0;
/// Measure-and-correct passes.
const GAIN_PASSES: usize = 3;

/// Set every voiced frame's F0 to the mean voiced F0 of its scope group.
/// Unvoiced frames, envelope and aperiodicity are untouched.
pub fn flatten_pitch(frames: &VocoderFrames, scope: &Scope) -> VocoderFrames {
    let mut out = frames.clone();
    let frame_s = frames.config.frame_period_ms / 1000.0;
    let groups = scope.groups(frames.len(), frame_s);
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let f0 = &frames.f0.f0_hz;
    let mut any = false;
    for g in 0..n_groups {
        let idx: Vec<usize> = (0..f0.len()).filter(|&i| groups[i] == g && f0[i] > 0.0).collect();
        if idx.is_empty() {
            continue;
        }
        any = true;
        let first = f0[idx[0]];
        // A constant group is already flat; skip it so repeated flattening
        // is exact.
        if idx.iter().all(|&i| f0[i] == first) {
            continue;
        }
        let mean = idx.iter().map(|&i| f0[i]).sum::<f64>() / idx.len() as f64;
        for &i in &idx {
            out.f0.f0_hz[i] = mean;
        }
    }
    if !any {
        log::info!("flatten_pitch: no voiced frames, returning input unchanged");
    }
    out
}

/// Per-frame gains in dB that move `levels` to `target` on active frames,
/// each a triangular-weighted average over its active neighbours within
/// the smoothing span.
/// Inactive frames get 0 dB.
fn smoothed_gains_db(levels: &[f64], target: &[f64], active: &[bool]) -> Vec<f64> {
    let raw: Vec<f64> = levels
        .iter()
        .zip(target)
        .map(|(l, t)| (t - l).clamp(-MAX_GAIN_DB, MAX_GAIN_DB))
        .collect();
    let half = GAIN_SMOOTH_FRAMES / 2;
    (0..raw.len())
        .map(|i| {
            if !active[i] {
                return 0.0;
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(raw.len());
            let (sum, weight) = (lo..hi).filter(|&j| active[j]).fold((0.0, 0.0), |(s, w), j| {
                let k = (half + 1 - i.abs_diff(j)) as f64;
                (s + k * raw[j], w + k)
            });
            sum / weight
        })
        .collect()
}

/// Apply per-frame linear gains sample by sample. Samples owned by an
/// active frame interpolate between neighbouring active frame centres;
/// samples owned by inactive frames are multiplied by `inactive_gain`
/// (exactly 1 leaves them bit-identical).
fn apply_gains(samples: &[f64], gains: &[f64], active: &[bool], hop: usize, inactive_gain: f64) -> Vec<f64> {
    let last = gains.len().saturating_sub(1);
    samples
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let o = owner_frame(n, hop).min(last);
            if !active[o] {
                return if inactive_gain == 1.0 { *x } else { x * inactive_gain };
            }
            let i0 = (n / hop).min(last);
            let i1 = (i0 + 1).min(last);
            let g = if active[i0] && active[i1] {
                let t = (n - i0 * hop) as f64 / hop as f64;
                gains[i0] * (1.0 - t.min(1.0)) + gains[i1] * t.min(1.0)
            } else {
                gains[o]
            };
            x * g
        })
        .collect()
}

/// Scale `signal` so its short-time level follows `target_db` on the
/// `active` frames (50 ms smoothed gain, two correction passes). Samples of
/// inactive frames are multiplied by `inactive_gain`.
pub fn match_intensity(signal: &[f64], target_db: &[f64], active: &[bool], hop: usize, inactive_gain: f64) -> Vec<f64> {
    let mut out = signal.to_vec();
    for pass in 0..GAIN_PASSES {
        let levels = frame_levels_db(&out, hop);
        let gains: Vec<f64> = smoothed_gains_db(&levels, target_db, active)
            .into_iter()
            .map(|db| 10f64.powf(db / 20.0))
            .collect();
        let g_inactive = if pass == 0 { inactive_gain } else { 1.0 };
        out = apply_gains(&out, &gains, active, hop, g_inactive);
    }
    out
}

/// Drive each active frame's level to the mean active level (in dB) of
/// its scope group. Frames at or below the energy floor are left
/// bit-identical. The result is peak-normalised if it would clip.
pub fn flatten_intensity(w: &Waveform, cfg: &VocoderConfig, scope: &Scope) -> Result<Waveform> {
    w.require_rate(PIPELINE_SAMPLE_RATE)?;
    let hop = cfg.hop();
    let levels = frame_levels_db(&w.samples, hop);
    let active: Vec<bool> = levels.iter().map(|l| *l > cfg.energy_floor_db).collect();
    if !active.iter().any(|a| *a) {
        return Ok(w.clone());
    }
    let groups = scope.groups(levels.len(), cfg.frame_period_ms / 1000.0);
    let target = group_means(&levels, &active, &groups);
    let samples = match_intensity(&w.samples, &target, &active, hop, 1.0);
    let mut out = Waveform::new(samples, w.sample_rate_hz)?;
    out.make_peak_safe();
    Ok(out)
}

/// Mean of `values` over active frames per group, broadcast to each frame.
pub(crate) fn group_means(values: &[f64], active: &[bool], groups: &[usize]) -> Vec<f64> {
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let mut sum = vec![0.0; n_groups];
    let mut count = vec![0usize; n_groups];
    for ((v, a), g) in values.iter().zip(active).zip(groups) {
        if *a {
            sum[*g] += v;
            count[*g] += 1;
        }
    }
    groups
        .iter()
        .map(|g| if count[*g] > 0 { sum[*g] / count[*g] as f64 } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocoder::{AperiodicityFrames, F0Track, SpectralFrames};

    fn with_f0(f0: Vec<f64>) -> VocoderFrames {
        let cfg = VocoderConfig::default();
        let n = f0.len();
        VocoderFrames::new(
            F0Track { f0_hz: f0, frame_period_ms: 10.0 },
            SpectralFrames { n_bins: cfg.n_bins(), data: vec![1e-3; n * cfg.n_bins()] },
            AperiodicityFrames { ratio: vec![0.1; n] },
            cfg,
        )
        .unwrap()
    }

    #[test]
    fn pitch_goes_to_voiced_mean() {
        let out = flatten_pitch(&with_f0(vec![100.0, 0.0, 120.0, 140.0]), &Scope::Whole);
        assert_eq!(out.f0.f0_hz, vec![120.0, 0.0, 120.0, 120.0]);
    }

    #[test]
    fn pitch_fixed_points() {
        for f0 in [vec![130.0; 5], vec![0.0; 4]] {
            let frames = with_f0(f0);
            assert_eq!(flatten_pitch(&frames, &Scope::Whole), frames);
        }
        let once = flatten_pitch(&with_f0(vec![101.0, 0.0, 133.0, 97.0, 150.0]), &Scope::Whole);
        assert_eq!(flatten_pitch(&once, &Scope::Whole), once);
    }

    #[test]
    fn pitch_per_segment() {
        let scope = Scope::Segments(vec![(0.0, 0.02), (0.02, 0.04)]);
        let out = flatten_pitch(&with_f0(vec![100.0, 110.0, 200.0, 220.0]), &scope);
        assert_eq!(out.f0.f0_hz, vec![105.0, 105.0, 210.0, 210.0]);
    }

    fn segment(amp: f64, secs: f64) -> Vec<f64> {
        crate::synth::white_noise(secs, amp, 16_000, 9).samples
    }

    #[test]
    fn two_levels_meet_in_the_middle() {
        let mut x = segment(0.1, 1.0);
        x.extend(segment(10f64.powf(-1.5), 1.0));
        let w = Waveform::new(x, 16_000).unwrap();
        let out = flatten_intensity(&w, &VocoderConfig::default(), &Scope::Whole).unwrap();
        for range in [1600..14_400, 17_600..30_400] {
            let db = crate::audio::amplitude_db(crate::audio::rms(&out.samples[range.clone()]));
            assert!((db + 25.0).abs() < 0.5, "{range:?}: {db}");
        }
    }

    #[test]
    fn leading_silence_is_untouched() {
        let mut x = vec![0.0; 8000];
        x[100] = 1e-6;
        x.extend(segment(0.1, 1.0));
        let w = Waveform::new(x, 16_000).unwrap();
        let out = flatten_intensity(&w, &VocoderConfig::default(), &Scope::Whole).unwrap();
        assert_eq!(&out.samples[..7800], &w.samples[..7800]);
    }

    #[test]
    fn flat_input_is_nearly_unchanged() {
        let w = crate::synth::sine(200.0, 0.3, 1.0, 16_000);
        let out = flatten_intensity(&w, &VocoderConfig::default(), &Scope::Whole).unwrap();
        for (a, b) in out.samples.iter().zip(&w.samples).skip(320).take(15_000) {
            if b.abs() > 1e-3 {
                assert!((a / b - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn silent_input_is_identity() {
        let w = Waveform::silence(1600, 16_000);
        assert_eq!(flatten_intensity(&w, &VocoderConfig::default(), &Scope::Whole).unwrap(), w);
    }
}
