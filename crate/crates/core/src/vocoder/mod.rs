//! Source-filter analysis and resynthesis on a fixed frame grid.
//!
//! Speech is decomposed into an F0 track, a per-frame power envelope and a
//! per-frame aperiodicity ratio. Frame `i` is centred on sample
//! `i * hop`; a signal of `n` samples has `ceil(n / hop)` frames.
//!
//! The estimators are deliberately simpler than the WORLD family:
//!
//! * F0: normalised cross-correlation candidates with a Viterbi continuity
//!   pass ([`estimate_f0`]).
//! * Envelope: cepstrally smoothed periodogram with a pitch-adaptive lifter
//!   ([`estimate_envelope`]).
//! * Aperiodicity: one scalar per frame ([`estimate_aperiodicity`]).

mod aperiodicity;
mod envelope;
mod f0;
mod synthesis;

pub use aperiodicity::estimate_aperiodicity;
pub use envelope::{estimate_envelope, pink_envelope, PINK_CORNER_HZ};
pub use f0::estimate_f0;
pub use synthesis::synthesize;

use rayon::prelude::*;

use crate::audio::{frame_count, Waveform, PIPELINE_SAMPLE_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VocoderConfig {
    pub sample_rate_hz: u32,
    pub frame_period_ms: f64,
    pub fft_size: usize,
    /// Frames are decoded in independent windows of this length.
    pub analysis_window_s: f64,
    pub f0_floor_hz: f64,
    pub f0_ceil_hz: f64,
    /// Frames quieter than this (dB re full scale) are treated as silence.
    pub energy_floor_db: f64,
    /// Minimum normalised correlation for a frame to be voiced.
    pub voicing_threshold: f64,
    /// Per-octave penalty on long-lag candidates.
    pub octave_cost: f64,
    /// Viterbi cost per octave of frame-to-frame F0 change.
    pub octave_jump_cost: f64,
    /// Viterbi cost of a voiced/unvoiced transition.
    pub voicing_transition_cost: f64,
    /// Aperiodicity assigned to perfectly periodic frames.
    pub voiced_aperiodicity_floor: f64,
}

impl Default for VocoderConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: PIPELINE_SAMPLE_RATE,
            frame_period_ms: 10.0,
            fft_size: 512,
            analysis_window_s: 30.0,
            f0_floor_hz: 60.0,
            f0_ceil_hz: 400.0,
            energy_floor_db: -60.0,
            voicing_threshold: 0.45,
            octave_cost: 0.02,
            octave_jump_cost: 0.35,
            voicing_transition_cost: 0.14,
            voiced_aperiodicity_floor: 0.05,
        }
    }
}

impl VocoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz != PIPELINE_SAMPLE_RATE {
            return Err(Error::SampleRate {
                expected: PIPELINE_SAMPLE_RATE,
                found: self.sample_rate_hz,
            });
        }
        if !(self.frame_period_ms > 0.0) {
            return Err(Error::invalid("frame_period_ms must be positive"));
        }
        if self.hop() == 0 {
            return Err(Error::invalid("frame period shorter than one sample"));
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < 64 {
            return Err(Error::invalid(format!(
                "fft_size must be a power of two >= 64, got {}",
                self.fft_size
            )));
        }
        if !(self.f0_floor_hz > 0.0 && self.f0_floor_hz < self.f0_ceil_hz) {
            return Err(Error::invalid("need 0 < f0_floor_hz < f0_ceil_hz"));
        }
        if self.f0_ceil_hz >= f64::from(self.sample_rate_hz) / 4.0 {
            return Err(Error::invalid("f0_ceil_hz too close to Nyquist"));
        }
        if !(self.analysis_window_s > 0.0) {
            return Err(Error::invalid("analysis_window_s must be positive"));
        }
        if !(0.0..=1.0).contains(&self.voicing_threshold) {
            return Err(Error::invalid("voicing_threshold must lie in [0, 1]"));
        }
        if !(0.0..=0.5).contains(&self.voiced_aperiodicity_floor) {
            return Err(Error::invalid("voiced_aperiodicity_floor must lie in [0, 0.5]"));
        }
        Ok(())
    }

    /// Frame hop in samples.
    pub fn hop(&self) -> usize {
        (self.frame_period_ms * f64::from(self.sample_rate_hz) / 1000.0).round() as usize
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames per independent decoding window.
    pub fn window_frames(&self) -> usize {
        ((self.analysis_window_s * 1000.0 / self.frame_period_ms).round() as usize).max(2)
    }

    /// Power assigned to every bin of a silent frame.
    pub fn floor_power(&self) -> f64 {
        10f64.powf(self.energy_floor_db / 10.0)
    }

    pub fn frame_count(&self, n_samples: usize) -> usize {
        frame_count(n_samples, self.hop())
    }

    pub(crate) fn check_input(&self, w: &Waveform) -> Result<()> {
        self.validate()?;
        w.require_rate(self.sample_rate_hz)
    }
}

/// Per-frame F0 in Hz; 0 marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub f0_hz: Vec<f64>,
    pub frame_period_ms: f64,
}

impl F0Track {
    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn is_voiced(&self, i: usize) -> bool {
        self.f0_hz[i] > 0.0
    }

    pub fn voiced_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz.iter().copied().filter(|f| *f > 0.0)
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.f0_hz.is_empty() {
            return 0.0;
        }
        self.voiced_values().count() as f64 / self.f0_hz.len() as f64
    }
}

/// Per-frame one-sided power envelope (`fft_size / 2 + 1` bins, linear power).
///
/// Scaled so that the two-sided bin mean equals the frame's mean-square
/// amplitude; see [`envelope_power`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrames {
    pub n_bins: usize,
    pub data: Vec<f64>,
}

impl SpectralFrames {
    pub fn len(&self) -> usize {
        if self.n_bins == 0 {
            0
        } else {
            self.data.len() / self.n_bins
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_bins..(i + 1) * self.n_bins]
    }

    pub fn frame_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_bins..(i + 1) * self.n_bins]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_bins.max(1))
    }
}

/// Mean-square amplitude implied by a one-sided power envelope.
pub fn envelope_power(bins: &[f64]) -> f64 {
    let n = bins.len();
    if n < 2 {
        return bins.first().copied().unwrap_or(0.0);
    }
    let inner: f64 = bins[1..n - 1].iter().sum();
    (bins[0] + bins[n - 1] + 2.0 * inner) / (2 * (n - 1)) as f64
}

/// Per-frame aperiodicity in `[0, 1]`; 1 means fully noise-excited.
#[derive(Debug, Clone, PartialEq)]
pub struct AperiodicityFrames {
    pub ratio: Vec<f64>,
}

/// The complete analysis bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct VocoderFrames {
    pub f0: F0Track,
    pub envelope: SpectralFrames,
    pub aperiodicity: AperiodicityFrames,
    pub config: VocoderConfig,
}

impl VocoderFrames {
    pub fn new(
        f0: F0Track,
        envelope: SpectralFrames,
        aperiodicity: AperiodicityFrames,
        config: VocoderConfig,
    ) -> Result<Self> {
        let frames = Self {
            f0,
            envelope,
            aperiodicity,
            config,
        };
        frames.validate()?;
        Ok(frames)
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.f0.len();
        if self.envelope.n_bins != self.config.n_bins() {
            return Err(Error::FrameMismatch {
                what: "envelope bins",
                expected: self.config.n_bins(),
                found: self.envelope.n_bins,
            });
        }
        if self.envelope.data.len() != n * self.envelope.n_bins {
            return Err(Error::FrameMismatch {
                what: "envelope",
                expected: n,
                found: self.envelope.len(),
            });
        }
        if self.aperiodicity.ratio.len() != n {
            return Err(Error::FrameMismatch {
                what: "aperiodicity",
                expected: n,
                found: self.aperiodicity.ratio.len(),
            });
        }
        if let Some(f) = self.f0.f0_hz.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(Error::invalid(format!("invalid F0 value {f}")));
        }
        if self.envelope.data.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("envelope bins must be finite and non-negative"));
        }
        if self.aperiodicity.ratio.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("aperiodicity must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Whether frame `i` carries only the silence floor.
    pub fn is_silent(&self, i: usize) -> bool {
        envelope_power(self.envelope.frame(i)) <= self.config.floor_power() * (1.0 + 1e-9)
    }

    /// Per-frame level in dB implied by the envelope.
    pub fn levels_db(&self) -> Vec<f64> {
        self.envelope
            .frames()
            .map(|b| crate::audio::power_db(envelope_power(b)))
            .collect()
    }
}

/// Run all three estimators.
pub fn analyze(w: &Waveform, cfg: &VocoderConfig) -> Result<VocoderFrames> {
    let f0 = estimate_f0(w, cfg)?;
    let (envelope, aperiodicity) = rayon::join(
        || estimate_envelope(w, &f0, cfg),
        || estimate_aperiodicity(w, &f0, cfg),
    );
    VocoderFrames::new(f0, envelope?, aperiodicity?, cfg.clone())
}

/// Read sample `i` of `x`, mirroring about the ends (`x[-1] = x[1]`).
pub(crate) fn reflect(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return x[0];
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    x[j as usize]
}

/// Copy `len` samples starting at `start` (may be negative) with reflection.
pub(crate) fn reflected_segment(x: &[f64], start: isize, len: usize) -> Vec<f64> {
    let n = x.len() as isize;
    if start >= 0 && start + len as isize <= n {
        return x[start as usize..start as usize + len].to_vec();
    }
    (0..len as isize).map(|k| reflect(x, start + k)).collect()
}

pub(crate) fn check_frames(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::FrameMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

pub(crate) fn par_frames<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}
