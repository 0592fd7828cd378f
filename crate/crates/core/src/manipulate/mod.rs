//! Speech manipulations: prosody-matched noise, pitch and intensity
//! flattening, background noise construction and SNR-calibrated mixing.

mod condition;
mod flatten;
mod measure;
mod mix;
mod noise;
mod plan;
mod prosody_noise;
mod scope;

pub use condition::{apply_condition, ConditionSpec, NoiseContext, NoiseKind, CONDITION_NAMES, TABLE_CONDITIONS};
pub use flatten::{flatten_intensity, flatten_pitch, match_intensity};
pub use measure::{envelope_correlation, f0_rmse, intensity_contour, pearson, voiced_f0_std};
pub use mix::{mix_at_snr, ActiveMask, MixResult};
pub use noise::{make_babble, music_excerpt, pink_noise, speech_noise};
pub use plan::{plan_mixed_training, MixAssignment, MixPlan};
pub use prosody_noise::{prosody_matched_noise, ProsodyVariant};
pub use scope::{Scope, ScopeMode};
