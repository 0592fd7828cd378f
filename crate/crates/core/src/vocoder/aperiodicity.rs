use crate::audio::Waveform;
use crate::error::Result;

use super::f0::Correlator;
use super::{check_frames, par_frames, AperiodicityFrames, F0Track, VocoderConfig};

/// Upper bound for voiced frames.
const VOICED_CEILING: f64 = 0.5;

/// One aperiodicity value per frame.
///
/// Unvoiced frames are fully aperiodic (1.0). Voiced frames get
/// `1 - r`, where `r` is the normalised correlation peak at the frame's
/// period, clamped to `[voiced_aperiodicity_floor, 0.5]`.
pub fn estimate_aperiodicity(
    w: &Waveform,
    f0: &F0Track,
    cfg: &VocoderConfig,
) -> Result<AperiodicityFrames> {
    cfg.check_input(w)?;
    let n_frames = cfg.frame_count(w.len());
    check_frames("f0 track", n_frames, f0.len())?;
    let hop = cfg.hop();
    let corr = Correlator::new(cfg);
    let sr = f64::from(cfg.sample_rate_hz);
    let ratio = par_frames(n_frames, |i| {
        let f = f0.f0_hz[i];
        if f <= 0.0 {
            return 1.0;
        }
        let buf = corr.buffer(&w.samples, i * hop);
        let r = corr.peak_near(&buf, sr / f);
        (1.0 - r).clamp(cfg.voiced_aperiodicity_floor, VOICED_CEILING)
    });
    Ok(AperiodicityFrames { ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::vocoder::estimate_f0;

    fn analyse(w: &Waveform) -> (F0Track, AperiodicityFrames) {
        let cfg = VocoderConfig::default();
        let f0 = estimate_f0(w, &cfg).unwrap();
        let ap = estimate_aperiodicity(w, &f0, &cfg).unwrap();
        (f0, ap)
    }

    fn voiced_mean(f0: &F0Track, ap: &AperiodicityFrames) -> f64 {
        let v: Vec<f64> = (0..f0.len())
            .filter(|&i| f0.is_voiced(i))
            .map(|i| ap.ratio[i])
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn pure_sine_sits_at_floor() {
        let (f0, ap) = analyse(&synth::sine(220.0, 0.5, 1.0, 16_000));
        for i in 0..f0.len() {
            if f0.is_voiced(i) {
                assert_eq!(ap.ratio[i], 0.05, "frame {i}");
            }
        }
    }

    #[test]
    fn white_noise_is_fully_aperiodic() {
        let (f0, ap) = analyse(&synth::white_noise(1.0, 0.3, 16_000, 2));
        for i in 0..f0.len() {
            if !f0.is_voiced(i) {
                assert_eq!(ap.ratio[i], 1.0);
            }
        }
        let all_ones = ap.ratio.iter().filter(|a| **a == 1.0).count();
        assert!(all_ones as f64 >= 0.9 * ap.ratio.len() as f64);
    }

    #[test]
    fn noisy_sine_is_more_aperiodic() {
        let clean = synth::sine(220.0, 0.5, 1.0, 16_000);
        let noise = synth::white_noise(1.0, clean.rms(), 16_000, 9);
        let noisy = Waveform::new(
            clean.samples.iter().zip(&noise.samples).map(|(a, b)| a + b).collect(),
            16_000,
        )
        .unwrap();
        let (f0c, apc) = analyse(&clean);
        let (f0n, apn) = analyse(&noisy);
        assert!(f0n.voiced_fraction() > 0.5, "noisy sine lost voicing");
        assert!(voiced_mean(&f0n, &apn) > voiced_mean(&f0c, &apc));
    }

    #[test]
    fn voiced_values_within_bounds() {
        let (f0, ap) = analyse(&synth::speech_like(&Default::default(), 1).wave);
        for i in 0..f0.len() {
            if f0.is_voiced(i) {
                assert!((0.05..=0.5).contains(&ap.ratio[i]));
            } else {
                assert_eq!(ap.ratio[i], 1.0);
            }
        }
    }
}
