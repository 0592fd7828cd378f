//! Prosody and lexical cue isolation for conversational speech.
//!
//! The crate is organised around the stages of a turn-taking robustness study:
//!
//! * [`vocoder`]: pitch / spectral envelope / aperiodicity analysis on a fixed
//!   10 ms grid and resynthesis from (possibly edited) frames.
//! * [`manipulate`]: prosody-matched noise, pitch and intensity flattening,
//!   background noise construction and SNR-calibrated mixing.
//! * [`events`]: word timings to voice activity, shift/hold extraction,
//!   mid-turn sampling and future-activity labels.
//! * [`eval`]: scoring of external probability streams, threshold tuning,
//!   F1 / balanced accuracy / WER / t-tests and sweep reports.
//! * [`prosody`]: a small prosody-only shift/hold predictor plus a synthetic
//!   planted-cue corpus used to verify it.

pub mod audio;
pub mod error;
pub mod eval;
pub mod events;
pub mod manipulate;
pub mod prosody;
pub mod seed;
pub mod sidecar;
pub mod synth;
pub mod vocoder;

pub use audio::{Waveform, PIPELINE_SAMPLE_RATE};
pub use error::{Error, Result};
pub use eval::{EvalReport, MetricSet, ProbabilityStream, ScoredEvent};
pub use events::{FutureActivityLabels, MidTurnPoint, TurnEvent, TurnKind, VadTrack, WordToken};
pub use manipulate::{ConditionSpec, MixPlan};
pub use vocoder::{VocoderConfig, VocoderFrames};
