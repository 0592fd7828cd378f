use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::{rms, Waveform};
use crate::error::{Error, Result};
use crate::seed::rng;
use crate::vocoder::PINK_CORNER_HZ;

fn scale_to_unit_rms(mut x: Vec<f64>) -> Result<Vec<f64>> {
    let r = rms(&x);
    if r <= 0.0 {
        return Err(Error::invalid("cannot normalise a silent signal"));
    }
    x.iter_mut().for_each(|v| *v /= r);
    Ok(x)
}

/// Seeded 1/f noise with RMS 1.
///
/// White Gaussian noise is shaped in one FFT by `1/sqrt(f)` (held at the
/// 20 Hz value below 20 Hz, DC removed). Samples may exceed 1 in magnitude.
pub fn pink_noise(duration_s: f64, sample_rate_hz: u32, seed: u64) -> Result<Waveform> {
    if !(duration_s > 0.0 && duration_s.is_finite()) || sample_rate_hz == 0 {
        return Err(Error::invalid(format!("pink noise needs a positive duration, got {duration_s}")));
    }
    let n = ((duration_s * f64::from(sample_rate_hz)).round() as usize).max(2);
    let mut r = rng(seed);
    let mut buf: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(r.sample(StandardNormal), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = f64::from(sample_rate_hz) / n as f64;
    buf[0] = Complex::new(0.0, 0.0);
    for k in 1..n {
        let f = k.min(n - k) as f64 * df;
        buf[k] /= f.max(PINK_CORNER_HZ).sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let x = scale_to_unit_rms(buf.iter().map(|c| c.re).collect())?;
    Waveform::new(x, sample_rate_hz)
}

/// `len` samples of `src` starting at `offset`, wrapping around.
fn looped(src: &[f64], offset: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| src[(offset + i) % src.len()]).collect()
}

fn n_samples(duration_s: f64, sr: u32) -> Result<usize> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(format!("duration must be positive, got {duration_s}")));
    }
    Ok((duration_s * f64::from(sr)).round() as usize)
}

fn check_sources(sources: &[Waveform]) -> Result<u32> {
    let sr = sources.first().ok_or(Error::Empty("noise sources"))?.sample_rate_hz;
    for (i, s) in sources.iter().enumerate() {
        if s.is_empty() || s.rms() == 0.0 {
            return Err(Error::invalid(format!("noise source {i} is empty or silent")));
        }
        s.require_rate(sr)?;
    }
    Ok(sr)
}

/// Sum of `n_overlap` distinct sources, each a randomly offset (looped)
/// excerpt scaled to unit RMS, renormalised to RMS 1.
pub fn make_babble(sources: &[Waveform], n_overlap: usize, duration_s: f64, seed: u64) -> Result<Waveform> {
    if n_overlap == 0 || sources.len() < n_overlap {
        return Err(Error::invalid(format!(
            "babble needs {n_overlap} sources, got {}",
            sources.len()
        )));
    }
    let sr = check_sources(sources)?;
    let n = n_samples(duration_s, sr)?;
    let mut r = rng(seed);
    let chosen = sample(&mut r, sources.len(), n_overlap);
    let mut sum = vec![0.0; n];
    for idx in chosen.iter() {
        let src = &sources[idx].samples;
        let offset = r.random_range(0..src.len());
        let ex = scale_to_unit_rms(looped(src, offset, n))?;
        sum.iter_mut().zip(ex).for_each(|(s, x)| *s += x);
    }
    Waveform::new(scale_to_unit_rms(sum)?, sr)
}

/// One randomly chosen utterance from a session other than `exclude`,
/// randomly offset, looped to length and scaled to RMS 1.
pub fn speech_noise(pool: &[(String, Waveform)], exclude: &str, duration_s: f64, seed: u64) -> Result<Waveform> {
    let others: Vec<&Waveform> = pool.iter().filter(|(id, _)| id != exclude).map(|(_, w)| w).collect();
    if others.is_empty() {
        return Err(Error::invalid(format!("no speech from sessions other than {exclude:?}")));
    }
    let sr = check_sources(&others.iter().map(|w| (*w).clone()).collect::<Vec<_>>())?;
    let n = n_samples(duration_s, sr)?;
    let mut r = rng(seed);
    let src = &others[r.random_range(0..others.len())].samples;
    let offset = r.random_range(0..src.len());
    Waveform::new(scale_to_unit_rms(looped(src, offset, n))?, sr)
}

/// A looped excerpt of one user-supplied music file, levels unchanged.
pub fn music_excerpt(files: &[Waveform], duration_s: f64, seed: u64) -> Result<Waveform> {
    let sr = check_sources(files)?;
    let n = n_samples(duration_s, sr)?;
    let mut r = rng(seed);
    let src = &files[r.random_range(0..files.len())].samples;
    let offset = r.random_range(0..src.len());
    Waveform::new(looped(src, offset, n), sr)
}
