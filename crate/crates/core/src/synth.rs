//! Deterministic synthetic signals used as fixtures by tests, benchmarks and
//! the self-test pipeline.
//!
//! Everything here is generated directly in the time domain (additive
//! synthesis, seeded noise) and never goes through the vocoder, so the
//! fixtures can serve as independent references for it.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::audio::Waveform;
use crate::seed::rng;

/// An F0 contour: `base * 2^(glide * t / 12) + depth * sin(2 pi rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub base_hz: f64,
    /// Semitones per second.
    pub glide_st_per_s: f64,
    pub vibrato_depth_hz: f64,
    pub vibrato_rate_hz: f64,
}

impl Contour {
    pub fn constant(f0: f64) -> Self {
        Self {
            base_hz: f0,
            glide_st_per_s: 0.0,
            vibrato_depth_hz: 0.0,
            vibrato_rate_hz: 0.0,
        }
    }

    pub fn vibrato(f0: f64, depth_hz: f64, rate_hz: f64) -> Self {
        Self {
            vibrato_depth_hz: depth_hz,
            vibrato_rate_hz: rate_hz,
            ..Self::constant(f0)
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.base_hz * (self.glide_st_per_s * t / 12.0).exp2()
            + self.vibrato_depth_hz * (2.0 * PI * self.vibrato_rate_hz * t).sin()
    }
}

pub fn sine(freq_hz: f64, amplitude: f64, duration_s: f64, sr: u32) -> Waveform {
    let n = (duration_s * f64::from(sr)).round() as usize;
    let w = 2.0 * PI * freq_hz / f64::from(sr);
    Waveform {
        samples: (0..n).map(|i| amplitude * (w * i as f64).sin()).collect(),
        sample_rate_hz: sr,
    }
}

/// Sum of sines with equal amplitude.
pub fn tones(freqs_hz: &[f64], amplitude: f64, duration_s: f64, sr: u32) -> Waveform {
    let n = (duration_s * f64::from(sr)).round() as usize;
    let mut samples = vec![0.0; n];
    for f in freqs_hz {
        let w = 2.0 * PI * f / f64::from(sr);
        for (i, s) in samples.iter_mut().enumerate() {
            *s += amplitude * (w * i as f64).sin();
        }
    }
    Waveform {
        samples,
        sample_rate_hz: sr,
    }
}

pub fn white_noise(duration_s: f64, rms: f64, sr: u32, seed: u64) -> Waveform {
    let n = (duration_s * f64::from(sr)).round() as usize;
    let mut r = rng(seed);
    Waveform {
        samples: (0..n)
            .map(|_| {
                let g: f64 = r.sample(StandardNormal);
                (g * rms).clamp(-1.0, 1.0)
            })
            .collect(),
        sample_rate_hz: sr,
    }
}

/// Band-limited harmonic tone following `contour`, harmonic `k` weighted by
/// `k^-tilt` (tilt 0 gives a pulse train), scaled to `peak`.
pub fn harmonic_tone(contour: &Contour, tilt: f64, peak: f64, duration_s: f64, sr: u32) -> Waveform {
    let n = (duration_s * f64::from(sr)).round() as usize;
    let nyq = 0.45 * f64::from(sr);
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let f0 = contour.at(i as f64 / f64::from(sr));
        phase += 2.0 * PI * f0 / f64::from(sr);
        if phase > 2.0 * PI {
            phase -= 2.0 * PI;
        }
        let k_max = (nyq / f0).floor() as usize;
        let s: f64 = (1..=k_max)
            .map(|k| (k as f64).powf(-tilt) * (k as f64 * phase).cos())
            .sum();
        samples.push(s);
    }
    let mut w = Waveform {
        samples,
        sample_rate_hz: sr,
    };
    scale_to_peak(&mut w, peak);
    w
}

fn scale_to_peak(w: &mut Waveform, peak: f64) {
    let p = w.peak();
    if p > 0.0 {
        let g = peak / p;
        w.samples.iter_mut().for_each(|x| *x *= g);
    }
}

const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
];
const BANDWIDTHS: [f64; 3] = [90.0, 120.0, 180.0];
const FORMANT_GAINS: [f64; 3] = [1.0, 0.6, 0.35];

fn formant_gain(f: f64, formants: &[f64; 3]) -> f64 {
    let resonances: f64 = formants
        .iter()
        .zip(BANDWIDTHS.iter().zip(FORMANT_GAINS))
        .map(|(fc, (bw, g))| {
            let x = (f - fc) / (0.5 * bw);
            g / (1.0 + x * x).sqrt()
        })
        .sum();
    (resonances + 0.02) / (1.0 + f / 1500.0)
}

/// Parameters of a synthetic utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeechSpec {
    pub duration_s: f64,
    pub f0: Contour,
    /// Peak amplitude of the loudest syllable.
    pub peak: f64,
    /// Silence before the first syllable.
    pub lead_in_s: f64,
}

impl Default for SpeechSpec {
    fn default() -> Self {
        Self {
            duration_s: 2.0,
            f0: Contour {
                base_hz: 140.0,
                glide_st_per_s: -1.5,
                vibrato_depth_hz: 4.0,
                vibrato_rate_hz: 4.5,
            },
            peak: 0.5,
            lead_in_s: 0.1,
        }
    }
}

/// A speech-like fixture with its ground-truth per-10 ms voicing.
#[derive(Debug, Clone)]
pub struct SpeechFixture {
    pub wave: Waveform,
    /// True F0 at each 10 ms frame centre; 0 where unvoiced or silent.
    pub f0_truth: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Silence,
    Vowel { from: usize, to: usize, gain: f64 },
    Fricative { gain: f64 },
}

/// Additive-synthesis "speech": voiced syllables with moving formants,
/// fricative noise bursts and syllabic amplitude envelopes.
pub fn speech_like(spec: &SpeechSpec, seed: u64) -> SpeechFixture {
    let sr = 16_000u32;
    let srf = f64::from(sr);
    let n = (spec.duration_s * srf).round() as usize;
    let mut r = rng(seed);

    // Segment plan over the whole duration.
    let mut plan: Vec<(usize, usize, Segment)> = Vec::new();
    let mut t = (spec.lead_in_s * srf) as usize;
    plan.push((0, t.min(n), Segment::Silence));
    let mut vowel = r.random_range(0..VOWELS.len());
    while t < n {
        if r.random_bool(0.3) {
            let len = (r.random_range(0.05..0.09) * srf) as usize;
            plan.push((t, (t + len).min(n), Segment::Fricative { gain: r.random_range(0.08..0.15) }));
            t += len;
        }
        let len = (r.random_range(0.16..0.28) * srf) as usize;
        let next = (vowel + r.random_range(1..VOWELS.len())) % VOWELS.len();
        plan.push((
            t.min(n),
            (t + len).min(n),
            Segment::Vowel {
                from: vowel,
                to: next,
                gain: r.random_range(0.45..1.0),
            },
        ));
        vowel = next;
        t += len;
    }

    let noise: Vec<f64> = (0..n + 1).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let mut samples = vec![0.0; n];
    let mut voiced = vec![false; n];
    let mut phase = 0.0;
    for &(a, b, seg) in &plan {
        let len = (b - a).max(1) as f64;
        for i in a..b {
            let u = (i - a) as f64 / len;
            let env = (PI * u).sin().powf(0.6);
            match seg {
                Segment::Silence => phase = 0.0,
                Segment::Fricative { gain } => {
                    // First difference tilts white noise upward in frequency.
                    samples[i] = gain * env * (noise[i + 1] - noise[i]) * 0.5;
                    phase = 0.0;
                }
                Segment::Vowel { from, to, gain } => {
                    let f0 = spec.f0.at(i as f64 / srf);
                    let mix = 0.5 - 0.5 * (PI * u).cos();
                    let mut fm = [0.0; 3];
                    for k in 0..3 {
                        fm[k] = VOWELS[from][k] * (1.0 - mix) + VOWELS[to][k] * mix;
                    }
                    phase += 2.0 * PI * f0 / srf;
                    if phase > 2.0 * PI {
                        phase -= 2.0 * PI;
                    }
                    let k_max = (0.45 * srf / f0) as usize;
                    let s: f64 = (1..=k_max)
                        .map(|k| formant_gain(k as f64 * f0, &fm) * (k as f64 * phase).cos())
                        .sum();
                    samples[i] = gain * env * s;
                    voiced[i] = env > 0.2;
                }
            }
        }
    }
    let mut wave = Waveform {
        samples,
        sample_rate_hz: sr,
    };
    scale_to_peak(&mut wave, spec.peak);

    let hop = 160;
    let f0_truth = (0..n.div_ceil(hop))
        .map(|i| {
            let c = (i * hop).min(n - 1);
            if voiced[c] {
                spec.f0.at(c as f64 / srf)
            } else {
                0.0
            }
        })
        .collect();
    SpeechFixture { wave, f0_truth }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let a = speech_like(&SpeechSpec::default(), 4);
        let b = speech_like(&SpeechSpec::default(), 4);
        assert_eq!(a.wave, b.wave);
        assert_eq!(a.f0_truth, b.f0_truth);
        assert!((a.wave.peak() - 0.5).abs() < 1e-12);
        assert_eq!(a.f0_truth.len(), 200);
    }

    #[test]
    fn harmonic_tone_peak() {
        let w = harmonic_tone(&Contour::vibrato(150.0, 5.0, 5.0), 0.0, 0.8, 0.5, 16_000);
        assert!((w.peak() - 0.8).abs() < 1e-12);
        assert_eq!(w.len(), 8000);
    }
}
