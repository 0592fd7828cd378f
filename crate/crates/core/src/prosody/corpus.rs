use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::events::{TurnEvent, TurnKind, WordToken};
use crate::seed::{derive_seed, rng};
use crate::vocoder::{envelope_power, synthesize, AperiodicityFrames, F0Track, SpectralFrames, VocoderConfig, VocoderFrames};

#[derive(Debug, Clone, PartialEq)]
pub struct CueCorpusOptions {
    pub n_sessions: usize,
    pub shifts_per_session: usize,
    pub holds_per_session: usize,
    /// Pitch fall (semitones) over the final `cue_s` of a pre-shift turn.
    pub fall_st: f64,
    /// Level drop (dB) over the same stretch.
    pub drop_db: f64,
    pub cue_s: f64,
    pub config: VocoderConfig,
}

impl Default for CueCorpusOptions {
    fn default() -> Self {
        Self {
            n_sessions: 10,
            shifts_per_session: 4,
            holds_per_session: 4,
            fall_st: 6.0,
            drop_db: 9.0,
            cue_s: 0.5,
            config: VocoderConfig::default(),
        }
    }
}

/// A synthetic two-speaker session with its planted events.
#[derive(Debug, Clone, PartialEq)]
pub struct CueSession {
    pub id: String,
    pub channels: [Waveform; 2],
    pub words: Vec<WordToken>,
    pub events: Vec<TurnEvent>,
}

const VOCAB: [&str; 16] = [
    "yeah", "so", "well", "i", "think", "that", "the", "really", "know", "okay", "right", "mean", "just", "like", "we",
    "going",
];

/// (F1, F2, F3) in Hz.
const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [530.0, 1840.0, 2480.0],
    [270.0, 2290.0, 3010.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
];

const FORMANT_BW_HZ: [f64; 3] = [90.0, 120.0, 170.0];
const CONSONANT_FRAMES: usize = 4;
const VOICED_APERIODICITY: f64 = 0.08;

struct Turn {
    speaker: usize,
    start: usize,
    end: usize,
    cue: bool,
}

fn vowel_envelope(formants: &[f64; 3], n_bins: usize, sr: f64, power: f64) -> Vec<f64> {
    let df = sr / (2 * (n_bins - 1)) as f64;
    let mut env: Vec<f64> = (0..n_bins)
        .map(|k| {
            let f = k as f64 * df;
            let res: f64 = formants
                .iter()
                .zip(FORMANT_BW_HZ)
                .enumerate()
                .map(|(j, (fk, bw))| 0.5f64.powi(j as i32) / (1.0 + ((f - fk) / bw).powi(2)))
                .sum();
            (res + 1e-3) / (1.0 + (f / 800.0).powi(2))
        })
        .collect();
    let s = power / envelope_power(&env);
    env.iter_mut().for_each(|p| *p *= s);
    env
}

fn fricative_envelope(n_bins: usize, sr: f64, power: f64) -> Vec<f64> {
    let df = sr / (2 * (n_bins - 1)) as f64;
    let mut env: Vec<f64> = (0..n_bins)
        .map(|k| {
            let f = k as f64 * df;
            1e-3 + 1.0 / (1.0 + ((f - 4500.0) / 1500.0).powi(2))
        })
        .collect();
    let s = power / envelope_power(&env);
    env.iter_mut().for_each(|p| *p *= s);
    env
}

/// Word intervals (in frames) covering `[start, end)` with short gaps that
/// the activity bridging rule merges.
fn word_spans(start: usize, end: usize, r: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut cursor = start;
    while cursor < end {
        let len = r.random_range(18..=45);
        let mut wend = (cursor + len).min(end);
        if end - wend < 20 {
            wend = end;
        }
        spans.push((cursor, wend));
        cursor = wend + r.random_range(2..=6);
        if cursor + 15 > end && wend < end {
            // Too little left for another word: stretch this one.
            spans.last_mut().unwrap().1 = end;
            break;
        }
    }
    spans
}

fn build_session(index: usize, opts: &CueCorpusOptions, seed: u64) -> Result<CueSession> {
    let id = format!("syn{index:03}");
    let mut r = rng(derive_seed(seed, &id));
    let cfg = &opts.config;
    let frame_s = cfg.frame_period_ms / 1000.0;
    let sr = f64::from(cfg.sample_rate_hz);
    let n_bins = cfg.n_bins();
    let frames_of = |s: f64| (s / frame_s).round() as usize;

    let base_f0 = [110.0 * r.random_range(0.9..1.1), 190.0 * r.random_range(0.9..1.1)];
    let base_db = [r.random_range(-28.0..-24.0), r.random_range(-28.0..-24.0)];

    let mut kinds: Vec<TurnKind> = std::iter::repeat_n(TurnKind::Shift, opts.shifts_per_session)
        .chain(std::iter::repeat_n(TurnKind::Hold, opts.holds_per_session))
        .collect();
    kinds.shuffle(&mut r);

    let mut turns = Vec::with_capacity(kinds.len() + 1);
    let mut speaker = r.random_range(0..2usize);
    let mut t = frames_of(0.5);
    for k in 0..=kinds.len() {
        let dur = frames_of(r.random_range(4.5..6.0));
        let next = kinds.get(k).copied();
        turns.push(Turn {
            speaker,
            start: t,
            end: t + dur,
            cue: next == Some(TurnKind::Shift),
        });
        t += dur;
        if next.is_some() {
            t += frames_of(r.random_range(0.35..0.7));
            if next == Some(TurnKind::Shift) {
                speaker = 1 - speaker;
            }
        }
    }
    let n_frames = t + frames_of(0.6);

    let events: Vec<TurnEvent> = turns
        .windows(2)
        .zip(&kinds)
        .map(|(pair, kind)| TurnEvent {
            kind: *kind,
            silence_start_s: pair[0].end as f64 * frame_s,
            silence_end_s: pair[1].start as f64 * frame_s,
            prev_speaker: pair[0].speaker as u8,
            next_speaker: pair[1].speaker as u8,
        })
        .collect();

    let floor = cfg.floor_power();
    let mut f0 = [vec![0.0; n_frames], vec![0.0; n_frames]];
    let mut ap = [vec![1.0; n_frames], vec![1.0; n_frames]];
    let mut env = [vec![floor; n_frames * n_bins], vec![floor; n_frames * n_bins]];
    let mut words = Vec::new();
    let cue_frames = opts.cue_s / frame_s;

    for turn in &turns {
        let s = turn.speaker;
        let phase = r.random_range(0.0..2.0 * PI);
        let phase_db = r.random_range(0.0..2.0 * PI);
        for (ws, we) in word_spans(turn.start, turn.end, &mut r) {
            words.push(WordToken {
                text: VOCAB[r.random_range(0..VOCAB.len())].to_string(),
                start_s: ws as f64 * frame_s,
                end_s: we as f64 * frame_s,
                channel: s as u8,
            });
            let vowel = VOWELS[r.random_range(0..VOWELS.len())];
            // Word gaps are only in the labels; the audio runs on to the next word.
            let audio_end = words_audio_end(we, turn.end);
            for i in ws..audio_end {
                let tau = (i - turn.start) as f64 * frame_s;
                let remaining = (turn.end - i) as f64;
                let cue = if turn.cue && remaining < cue_frames {
                    1.0 - remaining / cue_frames
                } else {
                    0.0
                };
                let st = -0.5 * tau + 0.8 * (2.0 * PI * 0.7 * tau + phase).sin() - opts.fall_st * cue;
                let db = base_db[s] + (2.0 * PI * 0.4 * tau + phase_db).sin() - opts.drop_db * cue;
                let power = 10f64.powf(db / 10.0);
                let bins = &mut env[s][i * n_bins..(i + 1) * n_bins];
                if i < ws + CONSONANT_FRAMES {
                    bins.copy_from_slice(&fricative_envelope(n_bins, sr, power * 0.2));
                } else {
                    f0[s][i] = (base_f0[s] * 2f64.powf(st / 12.0)).clamp(cfg.f0_floor_hz, cfg.f0_ceil_hz);
                    ap[s][i] = VOICED_APERIODICITY;
                    bins.copy_from_slice(&vowel_envelope(&vowel, n_bins, sr, power));
                }
            }
        }
    }

    let channels: Vec<Waveform> = (0..2)
        .into_par_iter()
        .map(|s| {
            let frames = VocoderFrames::new(
                F0Track {
                    f0_hz: f0[s].clone(),
                    frame_period_ms: cfg.frame_period_ms,
                },
                SpectralFrames {
                    n_bins,
                    data: env[s].clone(),
                },
                AperiodicityFrames { ratio: ap[s].clone() },
                cfg.clone(),
            )?;
            synthesize(&frames, derive_seed(seed, &format!("{id}/ch{s}")))
        })
        .collect::<Result<_>>()?;
    let [c0, c1]: [Waveform; 2] = channels
        .try_into()
        .map_err(|_| Error::invalid("expected two channels"))?;
    Ok(CueSession {
        id,
        channels: [c0, c1],
        words,
        events,
    })
}

/// Audio for a word continues through the following label gap unless the
/// turn ends there.
fn words_audio_end(word_end: usize, turn_end: usize) -> usize {
    (word_end + 6).min(turn_end)
}

/// Vocoder-synthesised dyads. Turns before a shift end with a pitch fall
/// and level drop over the last `cue_s`; turns before a hold (and the last
/// turn) keep flat contours. Every session has exactly the configured
/// numbers of shifts and holds.
pub fn synth_cue_corpus(opts: &CueCorpusOptions, seed: u64) -> Result<Vec<CueSession>> {
    opts.config.validate()?;
    if opts.n_sessions == 0 {
        return Err(Error::invalid("corpus needs at least one session"));
    }
    if opts.cue_s <= 0.0 || opts.fall_st < 0.0 || opts.drop_db < 0.0 {
        return Err(Error::invalid("cue length must be positive and cue sizes non-negative"));
    }
    (0..opts.n_sessions)
        .into_par_iter()
        .map(|i| build_session(i, opts, seed))
        .collect()
}
