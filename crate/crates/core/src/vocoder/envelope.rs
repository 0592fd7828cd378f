use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{power_db, Waveform};
use crate::error::Result;

use super::{check_frames, envelope_power, par_frames, reflected_segment, F0Track, SpectralFrames, VocoderConfig};

/// Fraction of the pitch period kept by the lifter on voiced frames.
const VOICED_LIFTER_PERIODS: f64 = 0.8;
/// Lifter cutoff on unvoiced frames.
const UNVOICED_LIFTER_S: f64 = 0.001;
/// Periodogram bins are floored this far below the frame power before the log.
const LOG_FLOOR_RELATIVE: f64 = 1e-10;
/// Pink spectra are flat below this frequency.
pub const PINK_CORNER_HZ: f64 = 20.0;

pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

struct EnvelopeEstimator {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    window_power: f64,
}

impl EnvelopeEstimator {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let window = hann(n);
        let window_power = window.iter().map(|w| w * w).sum();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            window,
            window_power,
        }
    }

    fn frame(&self, x: &[f64], centre: usize, f0: f64, cfg: &VocoderConfig) -> Vec<f64> {
        let n = cfg.fft_size;
        let n_bins = cfg.n_bins();
        let seg = reflected_segment(x, centre as isize - (n / 2) as isize, n);
        let mut buf: Vec<Complex<f64>> = seg
            .iter()
            .zip(&self.window)
            .map(|(s, w)| Complex::new(s * w, 0.0))
            .collect();
        self.fwd.process(&mut buf);
        let periodogram: Vec<f64> = buf.iter().map(|c| c.norm_sqr() / self.window_power).collect();
        let power = periodogram.iter().sum::<f64>() / n as f64;
        if power_db(power) <= cfg.energy_floor_db {
            return vec![cfg.floor_power(); n_bins];
        }

        let floor = power * LOG_FLOOR_RELATIVE;
        let mut ceps: Vec<Complex<f64>> = periodogram
            .iter()
            .map(|p| Complex::new(p.max(floor).ln(), 0.0))
            .collect();
        self.inv.process(&mut ceps);

        let sr = f64::from(cfg.sample_rate_hz);
        let cutoff = if f0 > 0.0 {
            VOICED_LIFTER_PERIODS * sr / f0.max(cfg.f0_floor_hz)
        } else {
            UNVOICED_LIFTER_S * sr
        };
        let keep = (cutoff.floor() as usize).clamp(1, n / 2);
        for (q, c) in ceps.iter_mut().enumerate() {
            let quefrency = q.min(n - q);
            if quefrency > keep {
                *c = Complex::new(0.0, 0.0);
            } else {
                *c /= n as f64;
            }
        }
        self.fwd.process(&mut ceps);

        let mut env: Vec<f64> = ceps[..n_bins].iter().map(|c| c.re.exp()).collect();
        let scale = power / envelope_power(&env);
        env.iter_mut().for_each(|p| *p *= scale);
        env
    }
}

/// Cepstrally smoothed power envelope for every frame.
///
/// Each frame is a Hann-windowed periodogram of `fft_size` samples centred
/// on the frame (reflected at the signal ends). The log spectrum is liftered
/// at 0.8 pitch periods on voiced frames and at 1 ms on unvoiced frames,
/// then rescaled so the envelope carries the frame's mean-square amplitude.
/// Frames at or below `energy_floor_db` get the floor envelope.
pub fn estimate_envelope(w: &Waveform, f0: &F0Track, cfg: &VocoderConfig) -> Result<SpectralFrames> {
    cfg.check_input(w)?;
    let n_frames = cfg.frame_count(w.len());
    check_frames("f0 track", n_frames, f0.len())?;
    let hop = cfg.hop();
    let est = EnvelopeEstimator::new(cfg.fft_size);
    let frames = par_frames(n_frames, |i| est.frame(&w.samples, i * hop, f0.f0_hz[i], cfg));
    Ok(SpectralFrames {
        n_bins: cfg.n_bins(),
        data: frames.concat(),
    })
}

/// A 1/f power shape over `n_bins` one-sided bins (flat below 20 Hz),
/// scaled to mean-square `power`.
pub fn pink_envelope(n_bins: usize, sample_rate_hz: u32, power: f64) -> Vec<f64> {
    let df = f64::from(sample_rate_hz) / (2 * (n_bins - 1)) as f64;
    let mut env: Vec<f64> = (0..n_bins)
        .map(|k| 1.0 / (k as f64 * df).max(PINK_CORNER_HZ))
        .collect();
    let scale = power / envelope_power(&env);
    env.iter_mut().for_each(|p| *p *= scale);
    env
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::vocoder::estimate_f0;

    fn analyse(w: &Waveform) -> SpectralFrames {
        let cfg = VocoderConfig::default();
        let f0 = estimate_f0(w, &cfg).unwrap();
        estimate_envelope(w, &f0, &cfg).unwrap()
    }

    fn db(p: f64) -> f64 {
        10.0 * p.log10()
    }

    #[test]
    fn sine_envelope_peaks_at_tone() {
        let env = analyse(&synth::sine(220.0, 0.5, 1.0, 16_000));
        let target_bin = 220.0 / 31.25;
        for i in 10..90 {
            let f = env.frame(i);
            let (arg, max) = f
                .iter()
                .enumerate()
                .fold((0, 0.0), |a, (k, v)| if *v > a.1 { (k, *v) } else { a });
            assert!((arg as f64 - target_bin).abs() <= 2.0, "frame {i}: peak bin {arg}");
            let hi: Vec<f64> = f.iter().skip(33).copied().collect();
            let mean_hi = hi.iter().sum::<f64>() / hi.len() as f64;
            assert!(db(max) - db(mean_hi) >= 20.0, "frame {i}");
        }
    }

    #[test]
    fn silence_envelope_is_floor() {
        let cfg = VocoderConfig::default();
        let env = analyse(&Waveform::silence(8000, 16_000));
        assert!(env.data.iter().all(|p| *p == cfg.floor_power()));
    }

    #[test]
    fn two_tone_envelope_has_both_maxima() {
        let env = analyse(&synth::tones(&[300.0, 3000.0], 0.3, 1.0, 16_000));
        let bins = [300.0 / 31.25, 3000.0 / 31.25];
        for i in 10..90 {
            let f = env.frame(i);
            let maxima: Vec<usize> = (1..f.len() - 1)
                .filter(|&k| f[k] >= f[k - 1] && f[k] > f[k + 1])
                .collect();
            for b in bins {
                assert!(
                    maxima.iter().any(|&k| (k as f64 - b).abs() <= 2.0),
                    "frame {i}: no maximum near bin {b}, maxima {maxima:?}"
                );
            }
        }
    }

    #[test]
    fn envelope_power_matches_signal_power() {
        let w = synth::white_noise(1.0, 0.1, 16_000, 5);
        let env = analyse(&w);
        let mean = env.frames().map(envelope_power).sum::<f64>() / env.len() as f64;
        assert!((mean / 0.01 - 1.0).abs() < 0.1, "mean power {mean}");
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let cfg = VocoderConfig::default();
        let w = synth::sine(100.0, 0.5, 0.5, 16_000);
        let f0 = F0Track {
            f0_hz: vec![0.0; 3],
            frame_period_ms: 10.0,
        };
        assert!(matches!(
            estimate_envelope(&w, &f0, &cfg),
            Err(crate::Error::FrameMismatch { .. })
        ));
    }

    #[test]
    fn pink_envelope_is_one_over_f() {
        let env = pink_envelope(257, 16_000, 0.5);
        assert!((envelope_power(&env) - 0.5).abs() < 1e-12);
        assert!((env[2] / env[4] - 2.0).abs() < 1e-12);
        assert!(env[0] > env[1]);
    }
}
