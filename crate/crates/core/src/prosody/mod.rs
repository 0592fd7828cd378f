//! A prosody-only shift/hold predictor: hand-built pitch and intensity
//! features over a trailing window and a logistic classifier, plus a
//! synthetic corpus with planted turn-final cues for self-checks.

mod corpus;
mod dataset;
mod features;
mod logistic;
mod stream;

pub use corpus::{synth_cue_corpus, CueCorpusOptions, CueSession};
pub use dataset::event_features;
pub use features::{features_csv, FeatureExtractor, ProsodyFeatures, DEFAULT_WINDOW_S, FEATURE_NAMES, N_FEATURES};
pub use logistic::{loss_and_gradient, train_logistic, LogisticModel, TrainOptions};
pub use stream::prosody_stream;
