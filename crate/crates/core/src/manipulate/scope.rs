use crate::events::{ipu_segments, WordToken};

/// Which frames share an "utterance" mean when flattening.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Scope {
    /// One mean over the whole signal.
    #[default]
    Whole,
    /// Consecutive fixed-length windows.
    Windows { len_s: f64 },
    /// Explicit segments in seconds (typically inter-pausal units). Frames
    /// outside every segment share one remainder group.
    Segments(Vec<(f64, f64)>),
}

impl Scope {
    /// Group index per frame, frames centred at `i * frame_s`.
    pub(crate) fn groups(&self, n_frames: usize, frame_s: f64) -> Vec<usize> {
        match self {
            Scope::Whole => vec![0; n_frames],
            Scope::Windows { len_s } => {
                let per = ((len_s / frame_s).round() as usize).max(1);
                (0..n_frames).map(|i| i / per).collect()
            }
            Scope::Segments(segs) => {
                let rest = segs.len();
                (0..n_frames)
                    .map(|i| {
                        let t = i as f64 * frame_s;
                        segs.iter().position(|(s, e)| *s <= t && t < *e).unwrap_or(rest)
                    })
                    .collect()
            }
        }
    }
}

/// How flattening scopes are derived for a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScopeMode {
    Whole,
    /// Fixed windows of this many seconds.
    Window(f64),
    /// The channel's inter-pausal units, words bridged across gaps of at
    /// most this many milliseconds. Falls back to the whole signal when the
    /// channel has no words.
    Ipu(f64),
}

impl Default for ScopeMode {
    fn default() -> Self {
        ScopeMode::Ipu(100.0)
    }
}

impl ScopeMode {
    pub fn resolve(self, words: &[WordToken], channel: u8) -> Scope {
        match self {
            ScopeMode::Whole => Scope::Whole,
            ScopeMode::Window(len_s) => Scope::Windows { len_s },
            ScopeMode::Ipu(bridge_ms) => {
                let segs = ipu_segments(words, channel, bridge_ms);
                if segs.is_empty() {
                    Scope::Whole
                } else {
                    Scope::Segments(segs)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping() {
        assert_eq!(Scope::Whole.groups(3, 0.01), vec![0, 0, 0]);
        assert_eq!(Scope::Windows { len_s: 0.02 }.groups(5, 0.01), vec![0, 0, 1, 1, 2]);
        let s = Scope::Segments(vec![(0.0, 0.015), (0.03, 0.05)]);
        assert_eq!(s.groups(6, 0.01), vec![0, 0, 2, 1, 1, 2]);
    }
}
