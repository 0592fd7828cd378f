use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::{VadTrack, VAD_FRAME_HZ};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct WordToken {
    pub text: String,
    #[serde(rename = "start")]
    pub start_s: f64,
    #[serde(rename = "end")]
    pub end_s: f64,
    pub channel: u8,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// One JSON object per line: `{"text", "start", "end", "channel"}`.
pub fn parse_jsonl(text: &str, path: &Path) -> Result<Vec<WordToken>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(path, i + 1, e.to_string())))
        .collect()
}

/// NIST CTM: `<file> <channel> <start> <duration> <word> [<confidence>]`.
///
/// Channels `A`/`B` or the 1-based `1`/`2` map to 0/1.
pub fn parse_ctm(text: &str, path: &Path) -> Result<Vec<WordToken>> {
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;") {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 5 {
            return Err(parse_err(path, i + 1, "expected at least 5 fields"));
        }
        let channel = match f[1] {
            "A" | "a" | "1" => 0,
            "B" | "b" | "2" => 1,
            other => return Err(parse_err(path, i + 1, format!("unknown channel {other:?}"))),
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err(path, i + 1, format!("{s:?}: {e}")))
        };
        let start = num(f[2])?;
        let dur = num(f[3])?;
        words.push(WordToken {
            text: f[4].to_string(),
            start_s: start,
            end_s: start + dur,
            channel,
        });
    }
    Ok(words)
}

/// Read word timings, choosing the format by extension (`.ctm` or JSON lines).
pub fn read_words(path: impl AsRef<Path>) -> Result<Vec<WordToken>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ctm")) {
        parse_ctm(&text, path)
    } else {
        parse_jsonl(&text, path)
    }
}

/// Merge sorted spans whose gaps are at most `bridge` seconds.
fn merge_spans(sorted: &[(f64, f64)], bridge: f64) -> Vec<(f64, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for &(s, e) in sorted {
        match merged.last_mut() {
            Some(last) if s - last.1 <= bridge + 1e-9 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Inter-pausal units of one channel: its words merged across gaps of at
/// most `bridge_ms`, in seconds.
pub fn ipu_segments(words: &[WordToken], channel: u8, bridge_ms: f64) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = words
        .iter()
        .filter(|w| w.channel == channel && w.start_s < w.end_s)
        .map(|w| (w.start_s, w.end_s))
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    merge_spans(&spans, bridge_ms / 1000.0)
}

/// Rasterise word timings to a two-channel 100 Hz activity track.
///
/// Per channel, words separated by at most `bridge_ms` are merged into one
/// segment; a frame is active when segments cover at least half of it. The
/// track spans `duration_s` if given, otherwise the last word end.
pub fn words_to_vad(words: &[WordToken], bridge_ms: f64, duration_s: Option<f64>) -> Result<VadTrack> {
    let mut per_channel: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for w in words {
        if !(w.start_s.is_finite() && w.end_s.is_finite() && w.start_s >= 0.0 && w.start_s < w.end_s) {
            return Err(Error::invalid(format!(
                "word {:?} has invalid interval {}..{}",
                w.text, w.start_s, w.end_s
            )));
        }
        if w.channel > 1 {
            return Err(Error::invalid(format!("word {:?} on channel {}", w.text, w.channel)));
        }
        per_channel[usize::from(w.channel)].push((w.start_s, w.end_s));
    }

    let last_end = words.iter().map(|w| w.end_s).fold(0.0, f64::max);
    let duration = duration_s.unwrap_or(last_end);
    let n_frames = (duration * VAD_FRAME_HZ - 1e-9).ceil().max(0.0) as usize;
    let mut vad = VadTrack::silent(n_frames);
    let bridge = bridge_ms / 1000.0;

    for (ch, spans) in per_channel.iter_mut().enumerate() {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for pair in spans.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::OverlappingWords {
                    channel: ch as u8,
                    first: pair[0],
                    second: pair[1],
                });
            }
        }
        let merged = merge_spans(spans, bridge);
        let mut cover = vec![0.0; n_frames];
        for (s, e) in merged {
            let first = (s * VAD_FRAME_HZ).floor() as usize;
            let last = ((e * VAD_FRAME_HZ).ceil() as usize).min(n_frames);
            for (i, c) in cover.iter_mut().enumerate().take(last).skip(first) {
                let lo = (i as f64 / VAD_FRAME_HZ).max(s);
                let hi = ((i + 1) as f64 / VAD_FRAME_HZ).min(e);
                *c += (hi - lo).max(0.0);
            }
        }
        let half = 0.5 / VAD_FRAME_HZ - 1e-9;
        for (a, c) in vad.active[ch].iter_mut().zip(cover) {
            *a = c >= half;
        }
    }
    Ok(vad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: f64, e: f64, ch: u8) -> WordToken {
        WordToken {
            text: "x".into(),
            start_s: s,
            end_s: e,
            channel: ch,
        }
    }

    fn segments(v: &[bool]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < v.len() {
            if v[i] {
                let s = i;
                while i < v.len() && v[i] {
                    i += 1;
                }
                out.push((s, i));
            } else {
                i += 1;
            }
        }
        out
    }

    #[test]
    fn short_gap_is_bridged() {
        let vad = words_to_vad(&[w(0.0, 0.5, 0), w(0.55, 1.0, 0)], 100.0, None).unwrap();
        assert_eq!(segments(&vad.active[0]), vec![(0, 100)]);
        assert!(vad.active[1].iter().all(|a| !a));
    }

    #[test]
    fn long_gap_stays_split() {
        let vad = words_to_vad(&[w(0.0, 0.5, 0), w(0.8, 1.0, 0)], 100.0, None).unwrap();
        assert_eq!(segments(&vad.active[0]), vec![(0, 50), (80, 100)]);
    }

    #[test]
    fn empty_words_give_silent_track() {
        let vad = words_to_vad(&[], 100.0, Some(2.0)).unwrap();
        assert_eq!(vad.n_frames(), 200);
        assert!(vad.active.iter().all(|c| c.iter().all(|a| !a)));
    }

    #[test]
    fn half_frame_rule() {
        // 0.004 s of frame 1 covered: inactive; 0.006 s of frame 3: active.
        let vad = words_to_vad(&[w(0.016, 0.036, 1)], 0.0, Some(0.05)).unwrap();
        assert_eq!(vad.active[1], vec![false, false, true, true, false]);
    }

    #[test]
    fn ipus_bridge_short_gaps() {
        let words = [w(0.0, 0.5, 0), w(0.55, 1.0, 0), w(2.0, 2.4, 0), w(0.2, 0.3, 1)];
        assert_eq!(ipu_segments(&words, 0, 100.0), vec![(0.0, 1.0), (2.0, 2.4)]);
        assert_eq!(ipu_segments(&words, 1, 100.0), vec![(0.2, 0.3)]);
    }

    #[test]
    fn overlapping_words_are_rejected() {
        let err = words_to_vad(&[w(0.0, 0.5, 1), w(0.4, 0.9, 1)], 100.0, None).unwrap_err();
        match err {
            Error::OverlappingWords { channel, first, second } => {
                assert_eq!(channel, 1);
                assert_eq!(first, (0.0, 0.5));
                assert_eq!(second, (0.4, 0.9));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn parses_jsonl_and_ctm() {
        let p = Path::new("mem");
        let j = parse_jsonl(
            "{\"text\":\"hi\",\"start\":0.1,\"end\":0.4,\"channel\":1}\n\n",
            p,
        )
        .unwrap();
        assert_eq!(j, vec![WordToken { text: "hi".into(), start_s: 0.1, end_s: 0.4, channel: 1 }]);
        let c = parse_ctm(";; comment\nsess A 0.10 0.30 hi 0.9\nsess 2 1.0 0.5 there\n", p).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].channel, 0);
        assert_eq!(c[1].channel, 1);
        assert!((c[0].end_s - 0.4).abs() < 1e-12);
        assert!(parse_ctm("sess C 0 1 x\n", p).is_err());
        assert!(matches!(parse_jsonl("{bad", p), Err(Error::Parse { line: 1, .. })));
    }
}
