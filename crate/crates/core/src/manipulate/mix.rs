use crate::audio::{active_frames, frame_count, masked_samples, rms, Waveform};
use crate::error::{Error, Result};
use crate::vocoder::VocoderConfig;

/// Per-frame speech activity on a hop grid; sample `n` belongs to the frame
/// whose centre is nearest.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveMask {
    pub frames: Vec<bool>,
    pub hop: usize,
}

impl ActiveMask {
    /// Frames whose short-time level exceeds the configured energy floor.
    pub fn from_levels(speech: &Waveform, cfg: &VocoderConfig) -> Self {
        Self {
            frames: active_frames(&speech.samples, cfg.hop(), cfg.energy_floor_db),
            hop: cfg.hop(),
        }
    }

    pub fn all(n_samples: usize, hop: usize) -> Self {
        Self {
            frames: vec![true; frame_count(n_samples, hop)],
            hop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixResult {
    pub waveform: Waveform,
    /// Gain applied to the noise before summing.
    pub noise_gain: f64,
    /// Peak-safety scale applied to the sum (1 if none was needed).
    pub output_scale: f64,
}

/// `speech + g * noise` with `g` chosen so the active-region SNR equals
/// `snr_db`. The noise is looped or truncated to the speech length.
pub fn mix_at_snr(speech: &Waveform, noise: &Waveform, snr_db: f64, mask: &ActiveMask) -> Result<MixResult> {
    speech.require_rate(noise.sample_rate_hz)?;
    if !snr_db.is_finite() {
        return Err(Error::invalid("SNR must be finite"));
    }
    if noise.is_empty() {
        return Err(Error::Empty("noise"));
    }
    let expected = frame_count(speech.len(), mask.hop);
    if mask.frames.len() != expected {
        return Err(Error::FrameMismatch {
            what: "active mask",
            expected,
            found: mask.frames.len(),
        });
    }
    let n = speech.len();
    let noise_fit: Vec<f64> = (0..n).map(|i| noise.samples[i % noise.len()]).collect();
    let s_active: Vec<f64> = masked_samples(&speech.samples, &mask.frames, mask.hop).collect();
    let n_active: Vec<f64> = masked_samples(&noise_fit, &mask.frames, mask.hop).collect();
    let rs = rms(&s_active);
    if rs <= 0.0 {
        return Err(Error::invalid("speech is silent over the active mask; SNR undefined"));
    }
    let rn = rms(&n_active);
    if rn <= 0.0 {
        return Err(Error::invalid("noise is silent over the active span"));
    }
    let noise_gain = rs / rn * 10f64.powf(-snr_db / 20.0);
    let mixed: Vec<f64> = speech
        .samples
        .iter()
        .zip(&noise_fit)
        .map(|(s, v)| s + noise_gain * v)
        .collect();
    let mut waveform = Waveform::new(mixed, speech.sample_rate_hz)?;
    let output_scale = waveform.make_peak_safe();
    Ok(MixResult {
        waveform,
        noise_gain,
        output_scale,
    })
}
