use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-frame shift probability for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityStream {
    pub frame_rate_hz: f64,
    /// Time of frame 0.
    pub start_s: f64,
    pub p_shift: Vec<f64>,
}

impl ProbabilityStream {
    pub fn new(frame_rate_hz: f64, start_s: f64, p_shift: Vec<f64>) -> Result<Self> {
        if !(frame_rate_hz > 0.0 && frame_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("frame rate {frame_rate_hz} must be positive")));
        }
        if !start_s.is_finite() {
            return Err(Error::invalid("stream start must be finite"));
        }
        if let Some((i, p)) = p_shift
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::invalid(format!("p_shift[{i}] = {p} outside [0, 1]")));
        }
        Ok(Self {
            frame_rate_hz,
            start_s,
            p_shift,
        })
    }

    pub fn constant(frame_rate_hz: f64, n: usize, p: f64) -> Result<Self> {
        Self::new(frame_rate_hz, 0.0, vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.p_shift.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_shift.is_empty()
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        self.start_s + frame as f64 / self.frame_rate_hz
    }

    /// Parse `t_s,p_shift` rows. The frame rate is inferred from the time
    /// column, which must be uniformly spaced.
    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| err(1, format!("missing column {name:?}")))
        };
        let (ti, pi) = (col("t_s")?, col("p_shift")?);
        let mut t = Vec::new();
        let mut p = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| err(line, e.to_string()))
            };
            t.push(num(ti)?);
            p.push(num(pi)?);
        }
        if t.len() < 2 {
            return Err(err(1, "need at least two rows to infer the frame rate".into()));
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(err(2, "time column must increase".into()));
        }
        for (i, pair) in t.windows(2).enumerate() {
            if ((pair[1] - pair[0]) - dt).abs() > 1e-3 * dt {
                return Err(err(i + 3, "non-uniform frame spacing".into()));
            }
        }
        let rate = (1.0 / dt * 1e6).round() / 1e6;
        Self::new(rate, t[0], p).map_err(|e| err(2, e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_s,p_shift\n");
        for (j, p) in self.p_shift.iter().enumerate() {
            let _ = writeln!(s, "{:.4},{:.6}", self.time_of(j), p);
        }
        s
    }
}

/// Collapse two-channel future-activity probabilities to a scalar shift
/// probability: the mean horizon probability of the listener channel
/// relative to the sum of both channels' means. Returns 0.5 when both
/// channels predict silence.
pub fn shift_probability(listener_bins: &[f64], speaker_bins: &[f64]) -> f64 {
    let m = |b: &[f64]| {
        if b.is_empty() {
            0.0
        } else {
            b.iter().sum::<f64>() / b.len() as f64
        }
    };
    let (l, s) = (m(listener_bins), m(speaker_bins));
    if l + s <= 0.0 {
        0.5
    } else {
        l / (l + s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_infers_rate() {
        let s = ProbabilityStream::new(20.0, 0.0, vec![0.1, 0.5, 0.9, 0.0]).unwrap();
        let back = ProbabilityStream::from_csv(&s.to_csv(), Path::new("x")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_out_of_range_and_irregular_input() {
        assert!(ProbabilityStream::new(20.0, 0.0, vec![1.5]).is_err());
        assert!(ProbabilityStream::new(0.0, 0.0, vec![0.5]).is_err());
        let p = Path::new("x");
        assert!(ProbabilityStream::from_csv("t_s,p_shift\n0,0.1\n0.05,0.2\n0.2,0.3\n", p).is_err());
        assert!(ProbabilityStream::from_csv("t,p\n0,0.1\n0.05,0.2\n", p).is_err());
    }

    #[test]
    fn adapter_relative_listener_mass() {
        assert_eq!(shift_probability(&[0.0; 40], &[0.0; 40]), 0.5);
        assert!((shift_probability(&[0.6; 40], &[0.2; 40]) - 0.75).abs() < 1e-12);
        assert_eq!(shift_probability(&[0.0; 40], &[1.0; 40]), 0.0);
    }
}
