use crate::error::Result;
use crate::events::{TurnEvent, TurnKind, VadTrack};
use crate::vocoder::VocoderFrames;

use super::{FeatureExtractor, ProsodyFeatures};

/// Features of the pre-gap speaker at each event's silence onset, labelled
/// `true` for shifts.
pub fn event_features(
    frames: [&VocoderFrames; 2],
    vad: &VadTrack,
    events: &[TurnEvent],
    window_s: f64,
) -> Result<Vec<(ProsodyFeatures, bool)>> {
    let ex = [
        FeatureExtractor::new(frames[0], vad, 0)?,
        FeatureExtractor::new(frames[1], vad, 1)?,
    ];
    events
        .iter()
        .map(|e| {
            let f = ex[usize::from(e.prev_speaker)].extract(e.silence_start_s, window_s)?;
            Ok((f, e.kind == TurnKind::Shift))
        })
        .collect()
}
