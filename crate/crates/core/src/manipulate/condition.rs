use crate::audio::{frame_levels_db, Waveform, PIPELINE_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::events::WordToken;
use crate::seed::derive_seed;
use crate::vocoder::{analyze, synthesize, VocoderConfig};

use super::flatten::match_intensity;
use super::{
    flatten_intensity, flatten_pitch, make_babble, mix_at_snr, music_excerpt, prosody_matched_noise, speech_noise,
    ActiveMask, ProsodyVariant, ScopeMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    None,
    ProsodyMatched,
    Babble,
    Speech,
    Music,
}

/// Every condition name the CLI accepts.
pub const CONDITION_NAMES: [&str; 10] = [
    "clean", "noise-pi", "noise-p", "noise-i", "flat-p", "flat-i", "flat-pi", "babble", "speech-noise", "music",
];

/// The seven lexical x pitch x intensity cells.
pub const TABLE_CONDITIONS: [&str; 7] = ["clean", "noise-pi", "noise-p", "noise-i", "flat-p", "flat-i", "flat-pi"];

/// One manipulation cell. The three flags are `true` when the cue is
/// preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSpec {
    pub name: String,
    pub lexical: bool,
    pub pitch: bool,
    pub intensity: bool,
    pub noise: NoiseKind,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl ConditionSpec {
    /// Build a spec from a CLI condition name. `noise-pi` with an SNR is
    /// prosody-matched noise mixed into the original speech.
    pub fn from_name(name: &str, snr_db: Option<f64>, seed: u64) -> Result<Self> {
        let (lexical, pitch, intensity, noise) = match name {
            "clean" => (true, true, true, NoiseKind::None),
            "noise-pi" if snr_db.is_some() => (true, true, true, NoiseKind::ProsodyMatched),
            "noise-pi" => (false, true, true, NoiseKind::ProsodyMatched),
            "noise-p" => (false, true, false, NoiseKind::ProsodyMatched),
            "noise-i" => (false, false, true, NoiseKind::ProsodyMatched),
            "flat-p" => (true, false, true, NoiseKind::None),
            "flat-i" => (true, true, false, NoiseKind::None),
            "flat-pi" => (true, false, false, NoiseKind::None),
            "babble" => (true, true, true, NoiseKind::Babble),
            "speech-noise" => (true, true, true, NoiseKind::Speech),
            "music" => (true, true, true, NoiseKind::Music),
            _ => {
                return Err(Error::invalid(format!(
                    "unknown condition {name:?}; expected one of {}",
                    CONDITION_NAMES.join(", ")
                )))
            }
        };
        let spec = Self {
            name: name.to_string(),
            lexical,
            pitch,
            intensity,
            noise,
            snr_db,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Whether this condition is mixed at an SNR (and so takes the grid).
    pub fn takes_snr(name: &str) -> bool {
        matches!(name, "babble" | "speech-noise" | "music")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(format!("condition {:?}: {msg}", self.name)));
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return bad("SNR must be finite");
            }
            if self.noise == NoiseKind::None {
                return bad("an SNR needs a noise kind");
            }
        }
        let pure_noise = self.noise == NoiseKind::ProsodyMatched && self.snr_db.is_none();
        if self.lexical == pure_noise {
            return bad("lexical content is removed exactly when prosody-matched noise is used without mixing");
        }
        if matches!(self.noise, NoiseKind::Babble | NoiseKind::Speech | NoiseKind::Music) && self.snr_db.is_none() {
            return bad("background noise needs an SNR");
        }
        Ok(())
    }

    pub fn is_clean(&self) -> bool {
        self.lexical && self.pitch && self.intensity && self.noise == NoiseKind::None
    }

    /// File-name tag, e.g. `babble_snr-2.5`.
    pub fn tag(&self) -> String {
        match self.snr_db {
            Some(snr) => format!("{}_snr{snr}", self.name),
            None => self.name.clone(),
        }
    }
}

/// Inputs shared by the conditions that need external material.
#[derive(Debug, Clone)]
pub struct NoiseContext<'a> {
    pub session_id: &'a str,
    pub config: &'a VocoderConfig,
    pub scope: ScopeMode,
    pub babble_sources: &'a [Waveform],
    pub babble_overlap: usize,
    /// Utterances from all sessions, keyed by session id.
    pub speech_pool: &'a [(String, Waveform)],
    pub music: &'a [Waveform],
}

impl<'a> NoiseContext<'a> {
    pub fn new(session_id: &'a str, config: &'a VocoderConfig) -> Self {
        Self {
            session_id,
            config,
            scope: ScopeMode::default(),
            babble_sources: &[],
            babble_overlap: 6,
            speech_pool: &[],
            music: &[],
        }
    }
}

/// Apply one condition to every channel of a session independently.
pub fn apply_condition(
    channels: &[Waveform],
    words: &[WordToken],
    spec: &ConditionSpec,
    ctx: &NoiseContext,
) -> Result<Vec<Waveform>> {
    spec.validate()?;
    channels
        .iter()
        .enumerate()
        .map(|(c, w)| {
            if spec.is_clean() {
                return Ok(w.clone());
            }
            let seed = derive_seed(spec.seed, &format!("{}/{}/ch{c}", ctx.session_id, spec.tag()));
            apply_channel(w, words, c as u8, spec, ctx, seed)
        })
        .collect()
}

fn apply_channel(
    w: &Waveform,
    words: &[WordToken],
    channel: u8,
    spec: &ConditionSpec,
    ctx: &NoiseContext,
    seed: u64,
) -> Result<Waveform> {
    w.require_rate(PIPELINE_SAMPLE_RATE)?;
    let cfg = ctx.config;
    let scope = ctx.scope.resolve(words, channel);
    if !spec.lexical {
        let frames = analyze(w, cfg)?;
        let variant = ProsodyVariant::from_flags(!spec.pitch, !spec.intensity);
        return prosody_matched_noise(&frames, w, variant, &scope, seed);
    }

    let mut speech = w.clone();
    if !spec.pitch {
        let frames = flatten_pitch(&analyze(w, cfg)?, &scope);
        let mut resynth = synthesize(&frames, seed)?.samples;
        resynth.resize(w.len(), 0.0);
        let hop = cfg.hop();
        let levels = frame_levels_db(&w.samples, hop);
        let active: Vec<bool> = levels.iter().map(|l| *l > cfg.energy_floor_db).collect();
        speech = Waveform::new(match_intensity(&resynth, &levels, &active, hop, 0.0), w.sample_rate_hz)?;
        speech.make_peak_safe();
    }
    if !spec.intensity {
        speech = flatten_intensity(&speech, cfg, &scope)?;
    }
    if let Some(snr) = spec.snr_db {
        let dur = speech.duration_s();
        let noise_seed = derive_seed(seed, "noise");
        let noise = match spec.noise {
            NoiseKind::ProsodyMatched => {
                let frames = analyze(&speech, cfg)?;
                prosody_matched_noise(&frames, &speech, ProsodyVariant::MatchBoth, &scope, noise_seed)?
            }
            NoiseKind::Babble => make_babble(ctx.babble_sources, ctx.babble_overlap, dur, noise_seed)?,
            NoiseKind::Speech => speech_noise(ctx.speech_pool, ctx.session_id, dur, noise_seed)?,
            NoiseKind::Music => music_excerpt(ctx.music, dur, noise_seed)?,
            NoiseKind::None => unreachable!("validated: SNR implies noise"),
        };
        let mask = ActiveMask::from_levels(&speech, cfg);
        speech = mix_at_snr(&speech, &noise, snr, &mask)?.waveform;
    }
    Ok(speech)
}
