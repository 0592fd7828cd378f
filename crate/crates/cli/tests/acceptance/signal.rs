use std::time::{Duration, Instant};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use turncue::audio::frame_levels_db;
use turncue::manipulate::{
    apply_condition, envelope_correlation, f0_rmse, mix_at_snr, pearson, pink_noise, voiced_f0_std, ActiveMask,
    ConditionSpec, NoiseContext, ScopeMode,
};
use turncue::synth::{harmonic_tone, speech_like, Contour, SpeechFixture, SpeechSpec};
use turncue::vocoder::{analyze, synthesize, VocoderConfig, VocoderFrames};
use turncue::Waveform;

use crate::Check;

const SR: u32 = 16_000;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn pop_std(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn fixtures() -> Vec<SpeechFixture> {
    (0..10).map(|seed| speech_like(&SpeechSpec::default(), 100 + seed)).collect()
}

fn condition(w: &Waveform, name: &str, cfg: &VocoderConfig, seed: u64) -> Waveform {
    let mut ctx = NoiseContext::new("fixture", cfg);
    ctx.scope = ScopeMode::Whole;
    let spec = ConditionSpec::from_name(name, None, seed).unwrap();
    apply_condition(std::slice::from_ref(w), &[], &spec, &ctx).unwrap().remove(0)
}

pub fn round_trip() -> Check {
    let t = Instant::now();
    let cfg = VocoderConfig::default();
    let mut worst_err = 0.0f64;
    let mut worst_agree = 1.0f64;
    for (i, f0) in [100.0, 150.0, 200.0, 250.0, 300.0].into_iter().enumerate() {
        let w = harmonic_tone(&Contour::vibrato(f0, 5.0, 5.0), 1.0, 0.5, 2.0, SR);
        let a = analyze(&w, &cfg).unwrap();
        let b = analyze(&synthesize(&a, i as u64).unwrap(), &cfg).unwrap();
        let pairs: Vec<(f64, f64)> = a.f0.f0_hz.iter().copied().zip(b.f0.f0_hz.iter().copied()).collect();
        let errs: Vec<f64> = pairs.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x - y).abs()).collect();
        let agree = pairs.iter().filter(|(x, y)| (*x > 0.0) == (*y > 0.0)).count() as f64 / pairs.len() as f64;
        worst_err = worst_err.max(if errs.is_empty() { f64::INFINITY } else { median(errs) });
        worst_agree = worst_agree.min(agree);
    }
    Check::new(
        worst_err < 2.0 && worst_agree >= 0.95,
        format!("worst median F0 error {worst_err:.3} Hz (< 2), worst V/UV agreement {:.1}% (>= 95)", 100.0 * worst_agree),
    )
    .timed(t.elapsed(), Duration::from_secs(30))
}

/// Levels of `b` against `a` over frames where `a` is above the floor.
fn contour_r(a: &Waveform, b: &Waveform, cfg: &VocoderConfig) -> f64 {
    let la = frame_levels_db(&a.samples, cfg.hop());
    let lb = frame_levels_db(&b.samples, cfg.hop());
    let idx: Vec<usize> = (0..la.len().min(lb.len())).filter(|&i| la[i] > cfg.energy_floor_db).collect();
    let x: Vec<f64> = idx.iter().map(|&i| la[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| lb[i]).collect();
    pearson(&x, &y)
}

pub fn prosody_noise() -> Check {
    let t = Instant::now();
    let cfg = VocoderConfig::default();
    let (mut rmse, mut r, mut env) = (0.0f64, 1.0f64, f64::NEG_INFINITY);
    for (seed, fx) in fixtures().iter().enumerate() {
        let a = analyze(&fx.wave, &cfg).unwrap();
        let noise = condition(&fx.wave, "noise-pi", &cfg, seed as u64);
        let b = analyze(&noise, &cfg).unwrap();
        rmse = rmse.max(f0_rmse(&a.f0, &b.f0).unwrap_or(f64::INFINITY));
        r = r.min(contour_r(&fx.wave, &noise, &cfg));
        env = env.max(envelope_correlation(&a, &b).unwrap());
    }
    Check::new(
        rmse < 5.0 && r > 0.95 && env < 0.3,
        format!("worst F0 RMSE {rmse:.2} Hz (< 5), worst intensity r {r:.3} (> 0.95), worst envelope corr {env:.3} (< 0.3)"),
    )
    .timed(t.elapsed(), Duration::from_secs(60))
}

fn active_levels(w: &Waveform, cfg: &VocoderConfig) -> Vec<f64> {
    frame_levels_db(&w.samples, cfg.hop())
        .into_iter()
        .filter(|l| *l > cfg.energy_floor_db)
        .collect()
}

pub fn flattening() -> Check {
    let cfg = VocoderConfig::default();
    let (mut ratio, mut level_std) = (0.0f64, 0.0f64);
    for (seed, fx) in fixtures().iter().enumerate() {
        let a: VocoderFrames = analyze(&fx.wave, &cfg).unwrap();
        let fp = analyze(&condition(&fx.wave, "flat-p", &cfg, seed as u64), &cfg).unwrap();
        ratio = ratio.max(voiced_f0_std(&fp.f0) / voiced_f0_std(&a.f0));
        let fi = condition(&fx.wave, "flat-i", &cfg, seed as u64);
        level_std = level_std.max(pop_std(&active_levels(&fi, &cfg)));
    }
    Check::new(
        ratio < 0.1 && level_std < 1.5,
        format!("worst flat-p F0 std ratio {ratio:.3} (< 0.1), worst flat-i level std {level_std:.2} dB (< 1.5)"),
    )
}

/// Active-region SNR of `mixed` recovered as `mixed / scale - speech`.
fn realized_snr(speech: &[f64], mixed: &[f64], scale: f64, mask: &ActiveMask) -> f64 {
    let last = mask.frames.len() - 1;
    let (mut ps, mut pn) = (0.0, 0.0);
    for (n, (s, m)) in speech.iter().zip(mixed).enumerate() {
        let frame = ((n + mask.hop / 2) / mask.hop).min(last);
        if mask.frames[frame] {
            ps += s * s;
            pn += (m / scale - s).powi(2);
        }
    }
    10.0 * (ps / pn).log10()
}

pub fn snr_calibration() -> Check {
    let cfg = VocoderConfig::default();
    let levels: Vec<f64> = (0..9).map(|i| -10.0 + 2.5 * i as f64).collect();
    let mut worst = 0.0f64;
    let mut n = 0;
    for seed in 0..3u64 {
        let speech = speech_like(&SpeechSpec::default(), 200 + seed).wave;
        let noise = pink_noise(speech.duration_s(), SR, 300 + seed).unwrap();
        let mask = ActiveMask::from_levels(&speech, &cfg);
        for &snr in &levels {
            let out = mix_at_snr(&speech, &noise, snr, &mask).unwrap();
            let got = realized_snr(&speech.samples, &out.waveform.samples, out.output_scale, &mask);
            worst = worst.max((got - snr).abs());
            n += 1;
        }
    }
    Check::new(
        worst <= 0.5,
        format!("{n} mixes over 9 levels, worst |realized - target| {worst:.4} dB (<= 0.5)"),
    )
}

/// Welch PSD (Hann, 50% overlap) of `x`; returns `(freq, power)` per bin.
fn welch(x: &[f64], seg: usize) -> Vec<(f64, f64)> {
    let win: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let mut acc = vec![0.0; seg / 2 + 1];
    let mut count = 0;
    let mut start = 0;
    while start + seg <= x.len() {
        let mut buf: Vec<Complex<f64>> = x[start..start + seg]
            .iter()
            .zip(&win)
            .map(|(v, w)| Complex::new(v * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        count += 1;
        start += seg / 2;
    }
    let df = f64::from(SR) / seg as f64;
    acc.iter().enumerate().map(|(k, p)| (k as f64 * df, p / count as f64)).collect()
}

pub fn pink_slope() -> Check {
    let mut slopes = Vec::new();
    for seed in 0..3u64 {
        let w = pink_noise(30.0, SR, 400 + seed).unwrap();
        let pts: Vec<(f64, f64)> = welch(&w.samples, 4096)
            .into_iter()
            .filter(|(f, _)| (100.0..=6000.0).contains(f))
            .map(|(f, p)| (f.log10(), 10.0 * p.log10()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        slopes.push(sxy / sxx);
    }
    let ok = slopes.iter().all(|s| (s + 10.0).abs() <= 1.5);
    let list: Vec<String> = slopes.iter().map(|s| format!("{s:.2}")).collect();
    Check::new(ok, format!("slopes [{}] dB/decade (-10 +/- 1.5)", list.join(", ")))
}
