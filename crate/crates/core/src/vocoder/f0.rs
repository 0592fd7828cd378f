use crate::audio::{power_db, Waveform};
use crate::error::Result;

use super::{par_frames, reflected_segment, F0Track, VocoderConfig};

/// Candidates kept per frame in addition to the unvoiced hypothesis.
const MAX_CANDIDATES: usize = 5;
/// Correlation peaks below this never become candidates.
const CANDIDATE_MIN_CORR: f64 = 0.2;

/// Normalised cross-correlation over a window centred on a frame.
///
/// For lag `tau` the two compared stretches are placed symmetrically about
/// the frame centre, so a glide in F0 is measured at the frame and not
/// ahead of it.
pub(crate) struct Correlator {
    pub min_lag: usize,
    pub max_lag: usize,
    /// Correlation length in samples (1.5 periods of the F0 floor).
    pub n_corr: usize,
    span: usize,
}

impl Correlator {
    pub fn new(cfg: &VocoderConfig) -> Self {
        let sr = f64::from(cfg.sample_rate_hz);
        let min_lag = ((sr / cfg.f0_ceil_hz).floor() as usize).max(2);
        let max_lag = (sr / cfg.f0_floor_hz).ceil() as usize;
        let n_corr = (1.5 * sr / cfg.f0_floor_hz).round() as usize;
        Self {
            min_lag,
            max_lag,
            n_corr,
            span: n_corr + max_lag + 2,
        }
    }

    /// Samples around frame centre `c`. The window slides inward at the
    /// ends of the signal and only reflects when the signal is shorter than
    /// the window.
    pub fn buffer(&self, x: &[f64], c: usize) -> Vec<f64> {
        let half = (self.span / 2) as isize;
        let mut start = c as isize - half;
        if x.len() >= self.span {
            start = start.clamp(0, (x.len() - self.span) as isize);
        }
        reflected_segment(x, start, self.span)
    }

    fn offset(&self, tau: usize) -> usize {
        (self.span - self.n_corr - tau) / 2
    }

    pub fn nccf(&self, buf: &[f64], tau: usize) -> f64 {
        let a = self.offset(tau);
        let x = &buf[a..a + self.n_corr];
        let y = &buf[a + tau..a + tau + self.n_corr];
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for (p, q) in x.iter().zip(y) {
            xy += p * q;
            xx += p * p;
            yy += q * q;
        }
        let denom = (xx * yy).sqrt();
        if denom <= f64::MIN_POSITIVE {
            0.0
        } else {
            xy / denom
        }
    }

    /// Level of the central `n_corr` samples in dB.
    pub fn level_db(&self, buf: &[f64]) -> f64 {
        let a = (self.span - self.n_corr) / 2;
        let e: f64 = buf[a..a + self.n_corr].iter().map(|v| v * v).sum();
        power_db(e / self.n_corr as f64)
    }

    /// Refined correlation peak near `lag` (searched within +-2 samples).
    pub fn peak_near(&self, buf: &[f64], lag: f64) -> f64 {
        let centre = lag.round() as isize;
        let lo = (centre - 2).max(self.min_lag as isize - 1).max(1) as usize;
        let hi = ((centre + 2) as usize).min(self.max_lag + 1);
        if lo > hi {
            return 0.0;
        }
        let r: Vec<f64> = (lo..=hi).map(|t| self.nccf(buf, t)).collect();
        let (k, _) = r
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        if k == 0 || k + 1 == r.len() {
            return r[k].clamp(-1.0, 1.0);
        }
        parabolic(r[k - 1], r[k], r[k + 1]).1.clamp(-1.0, 1.0)
    }
}

/// Vertex of the parabola through three equally spaced points: (offset, value).
pub(crate) fn parabolic(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return (0.0, b);
    }
    let d = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (d, b - 0.25 * (a - c) * d)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// 0 for the unvoiced hypothesis.
    f0: f64,
    cost: f64,
}

fn frame_candidates(x: &[f64], c: usize, corr: &Correlator, cfg: &VocoderConfig) -> Vec<Candidate> {
    let unvoiced = Candidate {
        f0: 0.0,
        cost: 1.0 - cfg.voicing_threshold,
    };
    let buf = corr.buffer(x, c);
    if corr.level_db(&buf) <= cfg.energy_floor_db {
        return vec![unvoiced];
    }
    let sr = f64::from(cfg.sample_rate_hz);
    let r: Vec<f64> = (corr.min_lag - 1..=corr.max_lag + 1)
        .map(|t| corr.nccf(&buf, t))
        .collect();
    let mut cands = Vec::new();
    for k in 1..r.len() - 1 {
        if r[k] < CANDIDATE_MIN_CORR || r[k] < r[k - 1] || r[k] <= r[k + 1] {
            continue;
        }
        let (d, peak) = parabolic(r[k - 1], r[k], r[k + 1]);
        let lag = (corr.min_lag - 1 + k) as f64 + d;
        let f0 = (sr / lag).clamp(cfg.f0_floor_hz, cfg.f0_ceil_hz);
        let octave_penalty = cfg.octave_cost * (lag * cfg.f0_ceil_hz / sr).log2().max(0.0);
        cands.push(Candidate {
            f0,
            cost: 1.0 - peak.min(1.0) + octave_penalty,
        });
    }
    cands.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    cands.truncate(MAX_CANDIDATES);
    cands.insert(0, unvoiced);
    cands
}

fn transition_cost(a: f64, b: f64, cfg: &VocoderConfig) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => cfg.octave_jump_cost * (a / b).log2().abs(),
        (false, false) => 0.0,
        _ => cfg.voicing_transition_cost,
    }
}

/// Viterbi decode of one window. When `fixed_first` is given, the first
/// frame is pinned to that candidate index.
fn decode(frames: &[Vec<Candidate>], fixed_first: Option<usize>, cfg: &VocoderConfig) -> Vec<usize> {
    if frames.is_empty() {
        return Vec::new();
    }
    let mut cost: Vec<f64> = frames[0]
        .iter()
        .enumerate()
        .map(|(j, c)| match fixed_first {
            Some(k) if k != j => f64::INFINITY,
            _ => c.cost,
        })
        .collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    back.push(vec![0; frames[0].len()]);
    for t in 1..frames.len() {
        let prev = &frames[t - 1];
        let mut next_cost = Vec::with_capacity(frames[t].len());
        let mut next_back = Vec::with_capacity(frames[t].len());
        for cand in &frames[t] {
            let (arg, best) = prev
                .iter()
                .enumerate()
                .map(|(i, p)| (i, cost[i] + transition_cost(p.f0, cand.f0, cfg)))
                .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
            next_cost.push(best + cand.cost);
            next_back.push(arg);
        }
        cost = next_cost;
        back.push(next_back);
    }
    let mut state = cost
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, c)| if *c < acc.1 { (i, *c) } else { acc })
        .0;
    let mut path = vec![0; frames.len()];
    for t in (0..frames.len()).rev() {
        path[t] = state;
        state = back[t][state];
    }
    path
}

/// Estimate the F0 track of `w`.
///
/// Each frame contributes an unvoiced hypothesis and up to five
/// correlation peaks; a Viterbi pass with octave-jump and voicing-change
/// penalties picks one per frame. Decoding runs over consecutive windows of
/// `analysis_window_s`, each pinned to the previous window's last decision
/// through one shared frame.
pub fn estimate_f0(w: &Waveform, cfg: &VocoderConfig) -> Result<F0Track> {
    cfg.check_input(w)?;
    let hop = cfg.hop();
    let n_frames = cfg.frame_count(w.len());
    let corr = Correlator::new(cfg);
    let x = &w.samples;
    let cands = par_frames(n_frames, |i| frame_candidates(x, i * hop, &corr, cfg));

    let win = cfg.window_frames();
    let mut states = Vec::with_capacity(n_frames);
    let mut start = 0;
    while start < n_frames {
        let end = (start + win).min(n_frames);
        if start == 0 {
            states.extend(decode(&cands[..end], None, cfg));
        } else {
            let pinned = *states.last().expect("previous window decoded");
            let path = decode(&cands[start - 1..end], Some(pinned), cfg);
            states.extend_from_slice(&path[1..]);
        }
        start = end;
    }

    let f0_hz = states
        .iter()
        .zip(&cands)
        .map(|(&s, c)| c[s].f0)
        .collect();
    Ok(F0Track {
        f0_hz,
        frame_period_ms: cfg.frame_period_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn sine_220_is_voiced_at_220() {
        let cfg = VocoderConfig::default();
        let w = synth::sine(220.0, 0.5, 1.0, 16_000);
        let t = estimate_f0(&w, &cfg).unwrap();
        assert_eq!(t.len(), 100);
        assert!(t.voiced_fraction() >= 0.95, "{}", t.voiced_fraction());
        let m = median(t.voiced_values().collect());
        assert!((218.0..=222.0).contains(&m), "median {m}");
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let cfg = VocoderConfig::default();
        let w = synth::white_noise(1.0, 0.3, 16_000, 11);
        let t = estimate_f0(&w, &cfg).unwrap();
        let unvoiced = 1.0 - t.voiced_fraction();
        assert!(unvoiced >= 0.9, "unvoiced fraction {unvoiced}");
    }

    #[test]
    fn silence_is_unvoiced() {
        let cfg = VocoderConfig::default();
        let t = estimate_f0(&Waveform::silence(16_000, 16_000), &cfg).unwrap();
        assert!(t.f0_hz.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn empty_input_gives_empty_track() {
        let cfg = VocoderConfig::default();
        let t = estimate_f0(&Waveform::silence(0, 16_000), &cfg).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn wrong_rate_is_rejected() {
        let cfg = VocoderConfig::default();
        let w = synth::sine(220.0, 0.5, 0.1, 8_000);
        assert!(matches!(
            estimate_f0(&w, &cfg),
            Err(crate::Error::SampleRate { found: 8000, .. })
        ));
    }

    #[test]
    fn windowed_decoding_matches_frame_count() {
        let cfg = VocoderConfig {
            analysis_window_s: 0.25,
            ..Default::default()
        };
        let w = synth::sine(150.0, 0.4, 1.03, 16_000);
        let t = estimate_f0(&w, &cfg).unwrap();
        assert_eq!(t.len(), w.len().div_ceil(160));
        assert!(t.voiced_fraction() > 0.95);
    }

    #[test]
    fn voiced_values_stay_in_range() {
        let cfg = VocoderConfig::default();
        let w = synth::harmonic_tone(&synth::Contour::vibrato(300.0, 5.0, 5.0), 1.0, 0.5, 1.0, 16_000);
        let t = estimate_f0(&w, &cfg).unwrap();
        assert!(t
            .voiced_values()
            .all(|f| (cfg.f0_floor_hz..=cfg.f0_ceil_hz).contains(&f)));
    }

    #[test]
    fn parabolic_vertex() {
        // y = -(x - 0.25)^2 sampled at -1, 0, 1
        let f = |x: f64| -(x - 0.25) * (x - 0.25);
        let (d, v) = parabolic(f(-1.0), f(0.0), f(1.0));
        assert!((d - 0.25).abs() < 1e-12);
        assert!(v.abs() < 1e-12);
    }
}
