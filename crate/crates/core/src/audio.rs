//! Mono waveforms, WAV I/O and the shared 10 ms framing helpers.

use std::path::Path;

use crate::error::{Error, Result};

/// Every pipeline entry point runs at 16 kHz.
pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;

/// Level reported for digital silence, in dB re full scale.
pub const SILENCE_DB: f64 = -300.0;

/// Peak applied when a synthesised or mixed signal would clip.
pub const PEAK_TARGET: f64 = 0.99;

/// A single-channel signal.
///
/// Samples are finite. Synthesis and mixing outputs stay within `[-1, 1]`;
/// intermediate noise sources (unit-RMS pink noise, babble) may exceed it
/// before gain staging.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn require_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate_hz != expected {
            return Err(Error::SampleRate {
                expected,
                found: self.sample_rate_hz,
            });
        }
        Ok(())
    }

    /// Rescale to [`PEAK_TARGET`] if any sample exceeds unit magnitude.
    /// Returns the applied gain (1.0 when untouched).
    pub fn make_peak_safe(&mut self) -> f64 {
        let peak = self.peak();
        if peak <= 1.0 {
            return 1.0;
        }
        let gain = PEAK_TARGET / peak;
        for x in &mut self.samples {
            *x *= gain;
        }
        log::info!("peak {peak:.3} exceeds full scale; rescaled by {gain:.4}");
        gain
    }

    /// Read a 16-bit PCM mono WAV file.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1
            || spec.bits_per_sample != 16
            || spec.sample_format != hound::SampleFormat::Int
        {
            return Err(Error::invalid(format!(
                "{}: expected 16-bit PCM mono, found {} ch / {} bit / {:?}",
                path.display(),
                spec.channels,
                spec.bits_per_sample,
                spec.sample_format
            )));
        }
        let samples = reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            samples,
            sample_rate_hz: spec.sample_rate,
        })
    }

    /// Write as 16-bit PCM mono. Samples outside `[-1, 1]` saturate.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate_hz,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(path, spec)?;
        for &x in &self.samples {
            writer.write_sample(quantize_i16(x))?;
        }
        writer.finalize()?;
        Ok(())
    }
}

fn quantize_i16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn amplitude_db(a: f64) -> f64 {
    if a > 0.0 {
        (20.0 * a.log10()).max(SILENCE_DB)
    } else {
        SILENCE_DB
    }
}

pub fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(SILENCE_DB)
    } else {
        SILENCE_DB
    }
}

/// Number of frames on a grid with hop `hop`: `ceil(n / hop)`.
pub fn frame_count(n_samples: usize, hop: usize) -> usize {
    n_samples.div_ceil(hop)
}

/// The frame whose centre (`i * hop`) is nearest to sample `n`.
pub fn owner_frame(n: usize, hop: usize) -> usize {
    (n + hop / 2) / hop
}

/// Short-time RMS level in dB for each frame of the hop grid, measured over
/// the 2-hop window `[i*hop - hop, i*hop + hop)` clipped to the signal.
pub fn frame_levels_db(samples: &[f64], hop: usize) -> Vec<f64> {
    let n = samples.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in samples {
        acc += x * x;
        prefix.push(acc);
    }
    (0..frame_count(n, hop))
        .map(|i| {
            let c = i * hop;
            let lo = c.saturating_sub(hop);
            let hi = (c + hop).min(n);
            if hi <= lo {
                return SILENCE_DB;
            }
            let energy = (prefix[hi] - prefix[lo]).max(0.0);
            power_db(energy / (hi - lo) as f64)
        })
        .collect()
}

/// Frames whose level exceeds `floor_db`.
pub fn active_frames(samples: &[f64], hop: usize, floor_db: f64) -> Vec<bool> {
    frame_levels_db(samples, hop)
        .into_iter()
        .map(|db| db > floor_db)
        .collect()
}

/// Expand a per-frame mask to sample indices using nearest-centre ownership
/// (samples past the last centre belong to the last frame).
pub fn masked_samples<'a>(
    samples: &'a [f64],
    mask: &'a [bool],
    hop: usize,
) -> impl Iterator<Item = f64> + 'a {
    let last = mask.len().saturating_sub(1);
    samples
        .iter()
        .enumerate()
        .filter(move |(n, _)| mask.get(owner_frame(*n, hop).min(last)).copied().unwrap_or(false))
        .map(|(_, x)| *x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_samples() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 16_000).is_err());
        assert!(Waveform::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn frame_count_is_ceiling() {
        assert_eq!(frame_count(0, 160), 0);
        assert_eq!(frame_count(1, 160), 1);
        assert_eq!(frame_count(160, 160), 1);
        assert_eq!(frame_count(161, 160), 2);
    }

    #[test]
    fn frame_levels_of_constant_signal() {
        let x = vec![0.1; 1600];
        let db = frame_levels_db(&x, 160);
        assert_eq!(db.len(), 10);
        for d in db {
            assert!((d + 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn peak_safety_rescales_only_when_needed() {
        let mut w = Waveform::new(vec![0.5, -0.2], 16_000).unwrap();
        assert_eq!(w.make_peak_safe(), 1.0);
        let mut w = Waveform::new(vec![2.0, -1.0], 16_000).unwrap();
        w.make_peak_safe();
        assert!((w.peak() - PEAK_TARGET).abs() < 1e-12);
    }

    #[test]
    fn wav_round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let w = Waveform::new(
            (0..400).map(|i| (i as f64 * 0.05).sin() * 0.7).collect(),
            16_000,
        )
        .unwrap();
        w.write_wav(&path).unwrap();
        let r = Waveform::read_wav(&path).unwrap();
        assert_eq!(r.sample_rate_hz, 16_000);
        assert_eq!(r.len(), w.len());
        for (a, b) in w.samples.iter().zip(&r.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }
}
