use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::Waveform;
use crate::error::Result;
use crate::seed::rng;

use super::envelope::hann;
use super::VocoderFrames;

struct Pulse {
    /// Fractional sample position.
    pos: f64,
    frame: usize,
    period: f64,
}

fn f0_at(f0: &[f64], hop: usize, n: usize) -> f64 {
    let last = f0.len() - 1;
    let u = n as f64 / hop as f64;
    let i0 = (u.floor() as usize).min(last);
    let i1 = (i0 + 1).min(last);
    if f0[i0] > 0.0 && f0[i1] > 0.0 {
        let t = (u - i0 as f64).clamp(0.0, 1.0);
        f0[i0] * (1.0 - t) + f0[i1] * t
    } else {
        f0[((u.round()) as usize).min(last)]
    }
}

/// Glottal pulse instants from the F0 track by phase accumulation.
fn pulse_times(f0: &[f64], hop: usize, n_out: usize, sr: f64) -> Vec<Pulse> {
    let mut pulses = Vec::new();
    let mut phase = 0.0;
    let mut was_voiced = false;
    for n in 0..n_out {
        let f = f0_at(f0, hop, n);
        if f <= 0.0 {
            was_voiced = false;
            continue;
        }
        let step = f / sr;
        let pos = if !was_voiced {
            phase = 0.0;
            Some(n as f64)
        } else {
            phase += step;
            if phase >= 1.0 {
                phase -= 1.0;
                Some(n as f64 - phase / step)
            } else {
                None
            }
        };
        was_voiced = true;
        if let Some(pos) = pos {
            pulses.push(Pulse {
                pos,
                frame: ((pos / hop as f64).round() as usize).min(f0.len() - 1),
                period: sr / f,
            });
        }
    }
    pulses
}

/// Resynthesise a waveform from analysis frames.
///
/// The periodic part places one zero-phase pulse per glottal period (with
/// sub-sample delay), shaped by `sqrt(envelope * (1 - aperiodicity))`. The
/// aperiodic part is seeded white noise filtered frame by frame with
/// `sqrt(envelope * aperiodicity)` and overlap-added with a Hann window of
/// two hops. Both parts are scaled so a frame's output power equals its
/// envelope power; silent (floor) frames produce no output. The result has
/// `frames * hop` samples and is rescaled to peak 0.99 if it would clip.
pub fn synthesize(frames: &VocoderFrames, seed: u64) -> Result<Waveform> {
    frames.validate()?;
    let cfg = &frames.config;
    let sr = cfg.sample_rate_hz;
    if frames.is_empty() {
        return Ok(Waveform::silence(0, sr));
    }
    let hop = cfg.hop();
    let n = cfg.fft_size;
    let n_bins = cfg.n_bins();
    let n_frames = frames.len();
    let n_out = n_frames * hop;
    let silent: Vec<bool> = (0..n_frames).map(|i| frames.is_silent(i)).collect();

    let mut planner = FftPlanner::<f64>::new();

    // Periodic excitation.
    let ifft = planner.plan_fft_inverse(n);
    let pulses = pulse_times(&frames.f0.f0_hz, hop, n_out, f64::from(sr));
    let rendered: Vec<(isize, Vec<f64>)> = pulses
        .par_iter()
        .filter(|p| !silent[p.frame])
        .map(|p| {
            let env = frames.envelope.frame(p.frame);
            let periodic = 1.0 - frames.aperiodicity.ratio[p.frame];
            let base = p.pos.floor();
            let delay = p.pos - base;
            let mut spec = vec![Complex::new(0.0, 0.0); n];
            for k in 0..n_bins {
                let mag = (env[k] * periodic * p.period).sqrt() / n as f64;
                let ang = -2.0 * PI * k as f64 * delay / n as f64;
                spec[k] = Complex::from_polar(mag, ang);
            }
            spec[n / 2] = Complex::new(spec[n / 2].re, 0.0);
            for k in 1..n / 2 {
                spec[n - k] = spec[k].conj();
            }
            ifft.process(&mut spec);
            // Zero-phase response: index m is lag m for m < n/2, m - n above.
            let mut h = Vec::with_capacity(n);
            h.extend(spec[n / 2..].iter().map(|c| c.re));
            h.extend(spec[..n / 2].iter().map(|c| c.re));
            (base as isize - (n / 2) as isize, h)
        })
        .collect();

    let mut out = vec![0.0; n_out];
    for (start, h) in &rendered {
        add_at(&mut out, *start, h);
    }

    // Aperiodic excitation.
    let m = (2 * hop + n).next_power_of_two();
    let pad = (m - 2 * hop) / 2;
    let mut r = rng(seed);
    let noise: Vec<f64> = (0..n_out + 2 * pad + 2 * hop)
        .map(|_| r.sample(StandardNormal))
        .collect();
    let fwd_m = planner.plan_fft_forward(m);
    let inv_m = planner.plan_fft_inverse(m);
    let window = hann(2 * hop);
    let noise_frames: Vec<(isize, Vec<f64>)> = (0..n_frames)
        .into_par_iter()
        .filter(|&i| !silent[i] && frames.aperiodicity.ratio[i] > 0.0)
        .map(|i| {
            let env = frames.envelope.frame(i);
            let ap = frames.aperiodicity.ratio[i];
            let start = (i * hop) as isize - hop as isize;
            // noise[k] holds global sample k - pad - hop.
            let e0 = (start + hop as isize) as usize;
            let mut buf: Vec<Complex<f64>> = noise[e0..e0 + m]
                .iter()
                .map(|v| Complex::new(*v, 0.0))
                .collect();
            fwd_m.process(&mut buf);
            for k in 0..=m / 2 {
                let pos = k as f64 * n as f64 / m as f64;
                let k0 = (pos.floor() as usize).min(n_bins - 1);
                let k1 = (k0 + 1).min(n_bins - 1);
                let t = pos - k0 as f64;
                let p = env[k0] * (1.0 - t) + env[k1] * t;
                let g = (p * ap).sqrt() / m as f64;
                buf[k] *= g;
                if k > 0 && k < m / 2 {
                    buf[m - k] *= g;
                }
            }
            inv_m.process(&mut buf);
            let seg: Vec<f64> = (0..2 * hop)
                .map(|j| window[j] * buf[pad + j].re)
                .collect();
            (start, seg)
        })
        .collect();
    for (start, seg) in &noise_frames {
        add_at(&mut out, *start, seg);
    }

    let mut w = Waveform::new(out, sr)?;
    w.make_peak_safe();
    Ok(w)
}

fn add_at(out: &mut [f64], start: isize, h: &[f64]) {
    let n = out.len() as isize;
    let lo = (-start).max(0) as usize;
    let hi = (n - start).clamp(0, h.len() as isize) as usize;
    for j in lo..hi {
        out[(start + j as isize) as usize] += h[j];
    }
}
