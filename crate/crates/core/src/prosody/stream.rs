use crate::error::Result;
use crate::eval::ProbabilityStream;
use crate::events::{VadTrack, VAD_FRAME_HZ};

use super::{FeatureExtractor, LogisticModel};

/// Run the classifier over a session at `rate_hz`.
///
/// At each time the features come from whichever speaker was most recently
/// the sole speaker; before anyone has spoken, and where the window holds
/// no frames, the probability is 0.
pub fn prosody_stream(
    model: &LogisticModel,
    extractors: [&FeatureExtractor; 2],
    vad: &VadTrack,
    rate_hz: f64,
    window_s: f64,
) -> Result<ProbabilityStream> {
    let n_vad = vad.n_frames();
    let mut last: Vec<Option<usize>> = Vec::with_capacity(n_vad);
    let mut cur = None;
    for i in 0..n_vad {
        match (vad.active[0][i], vad.active[1][i]) {
            (true, false) => cur = Some(0),
            (false, true) => cur = Some(1),
            _ => {}
        }
        last.push(cur);
    }
    let n = (vad.duration_s() * rate_hz).ceil() as usize;
    let p = (0..n)
        .map(|j| {
            let t = j as f64 / rate_hz;
            let idx = (t * VAD_FRAME_HZ - 1e-9).ceil() as isize - 1;
            let speaker = if idx >= 0 { last.get(idx as usize).copied().flatten() } else { None };
            match speaker {
                Some(s) => match extractors[s].extract(t, window_s) {
                    Ok(f) => model.predict(&f.0),
                    Err(_) => Ok(0.0),
                },
                None => Ok(0.0),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    ProbabilityStream::new(rate_hz, 0.0, p)
}
