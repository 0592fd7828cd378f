use crate::audio::{frame_levels_db, Waveform};
use crate::error::{Error, Result};
use crate::vocoder::{F0Track, VocoderConfig, VocoderFrames};

/// Short-time level (dB) on the vocoder frame grid.
pub fn intensity_contour(w: &Waveform, cfg: &VocoderConfig) -> Vec<f64> {
    frame_levels_db(&w.samples, cfg.hop())
}

/// Pearson correlation; 0 when either side has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Bands used by [`envelope_correlation`].
const CORR_BANDS: usize = 24;
const CORR_LOW_HZ: f64 = 100.0;
const CORR_HIGH_HZ: f64 = 7000.0;

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

/// Log power in mel-spaced bands between 100 Hz and 7 kHz.
fn log_bands(bins: &[f64], sample_rate_hz: u32) -> Vec<f64> {
    let df = f64::from(sample_rate_hz) / (2 * (bins.len() - 1)) as f64;
    let (lo, hi) = (mel(CORR_LOW_HZ), mel(CORR_HIGH_HZ.min(0.5 * f64::from(sample_rate_hz))));
    let mut sum = [0.0; CORR_BANDS];
    let mut count = [0usize; CORR_BANDS];
    for (k, p) in bins.iter().enumerate() {
        let m = mel(k as f64 * df);
        if m < lo || m >= hi {
            continue;
        }
        let b = (((m - lo) / (hi - lo)) * CORR_BANDS as f64) as usize;
        sum[b] += p;
        count[b] += 1;
    }
    sum.iter()
        .zip(count)
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| (s / c as f64).max(1e-30).ln())
        .collect()
}

/// Mean per-frame correlation between two envelope sequences, over frames
/// that are non-silent in both.
///
/// Envelopes are reduced to 24 mel bands (100 Hz to 7 kHz) in log power
/// and each side's long-term mean band profile is subtracted, so the
/// comparison tracks frame-to-frame spectral movement (formants) rather
/// than an overall tilt that any speech-shaped noise would share.
pub fn envelope_correlation(a: &VocoderFrames, b: &VocoderFrames) -> Result<f64> {
    if a.envelope.n_bins != b.envelope.n_bins {
        return Err(Error::FrameMismatch {
            what: "envelope bins",
            expected: a.envelope.n_bins,
            found: b.envelope.n_bins,
        });
    }
    let n = a.len().min(b.len());
    let frames: Vec<usize> = (0..n).filter(|&i| !a.is_silent(i) && !b.is_silent(i)).collect();
    if frames.is_empty() {
        return Err(Error::Empty("frames active in both signals"));
    }
    let centred = |v: &VocoderFrames| -> Vec<Vec<f64>> {
        let mut l: Vec<Vec<f64>> = frames
            .iter()
            .map(|&i| log_bands(v.envelope.frame(i), v.config.sample_rate_hz))
            .collect();
        let width = l[0].len();
        let mut mean = vec![0.0; width];
        for f in &l {
            mean.iter_mut().zip(f).for_each(|(m, x)| *m += x / frames.len() as f64);
        }
        for f in l.iter_mut() {
            f.iter_mut().zip(&mean).for_each(|(x, m)| *x -= m);
        }
        l
    };
    let (la, lb) = (centred(a), centred(b));
    let total: f64 = la.iter().zip(&lb).map(|(x, y)| pearson(x, y)).sum();
    Ok(total / frames.len() as f64)
}

/// RMS difference over frames voiced in both tracks; `None` if there are none.
pub fn f0_rmse(a: &F0Track, b: &F0Track) -> Option<f64> {
    let d: Vec<f64> = a
        .f0_hz
        .iter()
        .zip(&b.f0_hz)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    if d.is_empty() {
        None
    } else {
        Some((d.iter().sum::<f64>() / d.len() as f64).sqrt())
    }
}

/// Population standard deviation of voiced F0 values.
pub fn voiced_f0_std(f0: &F0Track) -> f64 {
    let v: Vec<f64> = f0.voiced_values().collect();
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn rmse_over_common_voiced_frames() {
        let t = |v: Vec<f64>| F0Track { f0_hz: v, frame_period_ms: 10.0 };
        let r = f0_rmse(&t(vec![100.0, 0.0, 110.0]), &t(vec![103.0, 120.0, 106.0])).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(f0_rmse(&t(vec![0.0]), &t(vec![100.0])), None);
    }
}
