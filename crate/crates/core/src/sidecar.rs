//! Little-endian binary sidecars for pipeline caching.
//!
//! Every file starts with a four-byte magic and a `u16` version:
//!
//! | magic  | payload |
//! |--------|---------|
//! | `TCVF` | vocoder config block, `n_frames: u64`, `n_bins: u32`, F0, aperiodicity, envelope (`f64` each) |
//! | `TCFL` | `frame_hz: f64`, `horizon: u16`, `n_frames: u64`, then per frame a validity byte and `ceil(2*horizon/8)` packed label bytes (channel-major, LSB first) |
//! | `TCPS` | `frame_rate_hz: f64`, `start_s: f64`, `n: u64`, `p_shift: f64 * n` |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::eval::ProbabilityStream;
use crate::events::FutureActivityLabels;
use crate::vocoder::{AperiodicityFrames, F0Track, SpectralFrames, VocoderConfig, VocoderFrames};

pub const FRAMES_MAGIC: &[u8; 4] = b"TCVF";
pub const LABELS_MAGIC: &[u8; 4] = b"TCFL";
pub const STREAM_MAGIC: &[u8; 4] = b"TCPS";
pub const VERSION: u16 = 1;

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        self.0.write_all(magic)?;
        self.u16(VERSION)
    }
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u16(&mut self, v: u16) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        vs.iter().try_for_each(|v| self.f64(*v))
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::Sidecar(format!("truncated: {e}")))?;
        Ok(b)
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let m: [u8; 4] = self.bytes()?;
        if &m != magic {
            return Err(Error::Sidecar(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(magic)
            )));
        }
        let v = self.u16()?;
        if v != VERSION {
            return Err(Error::Sidecar(format!("unsupported version {v}")));
        }
        Ok(())
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn len(&mut self, limit: u64) -> Result<usize> {
        let n = self.u64()?;
        if n > limit {
            return Err(Error::Sidecar(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }
}

const MAX_LEN: u64 = 1 << 32;

pub fn write_frames<W: Write>(w: W, frames: &VocoderFrames) -> Result<()> {
    let mut o = Out(w);
    o.header(FRAMES_MAGIC)?;
    let c = &frames.config;
    o.u32(c.sample_rate_hz)?;
    o.f64(c.frame_period_ms)?;
    o.u32(c.fft_size as u32)?;
    for v in [
        c.analysis_window_s,
        c.f0_floor_hz,
        c.f0_ceil_hz,
        c.energy_floor_db,
        c.voicing_threshold,
        c.octave_cost,
        c.octave_jump_cost,
        c.voicing_transition_cost,
        c.voiced_aperiodicity_floor,
    ] {
        o.f64(v)?;
    }
    o.u64(frames.len() as u64)?;
    o.u32(frames.envelope.n_bins as u32)?;
    o.f64s(&frames.f0.f0_hz)?;
    o.f64s(&frames.aperiodicity.ratio)?;
    o.f64s(&frames.envelope.data)?;
    Ok(())
}

pub fn read_frames<R: Read>(r: R) -> Result<VocoderFrames> {
    let mut i = In(r);
    i.header(FRAMES_MAGIC)?;
    let sample_rate_hz = i.u32()?;
    let frame_period_ms = i.f64()?;
    let fft_size = i.u32()? as usize;
    let config = VocoderConfig {
        sample_rate_hz,
        frame_period_ms,
        fft_size,
        analysis_window_s: i.f64()?,
        f0_floor_hz: i.f64()?,
        f0_ceil_hz: i.f64()?,
        energy_floor_db: i.f64()?,
        voicing_threshold: i.f64()?,
        octave_cost: i.f64()?,
        octave_jump_cost: i.f64()?,
        voicing_transition_cost: i.f64()?,
        voiced_aperiodicity_floor: i.f64()?,
    };
    let n = i.len(MAX_LEN)?;
    let n_bins = i.u32()? as usize;
    let f0_hz = i.f64s(n)?;
    let ratio = i.f64s(n)?;
    let data = i.f64s(n * n_bins)?;
    VocoderFrames::new(
        F0Track {
            f0_hz,
            frame_period_ms,
        },
        SpectralFrames { n_bins, data },
        AperiodicityFrames { ratio },
        config,
    )
    .map_err(|e| Error::Sidecar(e.to_string()))
}

pub fn write_labels<W: Write>(w: W, labels: &FutureActivityLabels) -> Result<()> {
    let mut o = Out(w);
    o.header(LABELS_MAGIC)?;
    o.f64(labels.frame_hz)?;
    o.u16(labels.horizon as u16)?;
    o.u64(labels.n_frames() as u64)?;
    let bits = 2 * labels.horizon;
    for t in 0..labels.n_frames() {
        o.u8(u8::from(labels.valid[t]))?;
        let mut packed = vec![0u8; bits.div_ceil(8)];
        for c in 0..2 {
            for k in 0..labels.horizon {
                if labels.get(t, c, k) {
                    let b = c * labels.horizon + k;
                    packed[b / 8] |= 1 << (b % 8);
                }
            }
        }
        o.0.write_all(&packed)?;
    }
    Ok(())
}

pub fn read_labels<R: Read>(r: R) -> Result<FutureActivityLabels> {
    let mut i = In(r);
    i.header(LABELS_MAGIC)?;
    let frame_hz = i.f64()?;
    let horizon = usize::from(i.u16()?);
    let n = i.len(MAX_LEN)?;
    let bits = 2 * horizon;
    let mut valid = Vec::with_capacity(n);
    let mut active = Vec::with_capacity(n * bits);
    for _ in 0..n {
        valid.push(i.u8()? != 0);
        let mut packed = vec![0u8; bits.div_ceil(8)];
        i.0.read_exact(&mut packed)
            .map_err(|e| Error::Sidecar(format!("truncated: {e}")))?;
        active.extend((0..bits).map(|b| packed[b / 8] >> (b % 8) & 1 == 1));
    }
    Ok(FutureActivityLabels {
        frame_hz,
        horizon,
        active,
        valid,
    })
}

pub fn write_stream<W: Write>(w: W, s: &ProbabilityStream) -> Result<()> {
    let mut o = Out(w);
    o.header(STREAM_MAGIC)?;
    o.f64(s.frame_rate_hz)?;
    o.f64(s.start_s)?;
    o.u64(s.p_shift.len() as u64)?;
    o.f64s(&s.p_shift)
}

pub fn read_stream<R: Read>(r: R) -> Result<ProbabilityStream> {
    let mut i = In(r);
    i.header(STREAM_MAGIC)?;
    let rate = i.f64()?;
    let start = i.f64()?;
    let n = i.len(MAX_LEN)?;
    let p = i.f64s(n)?;
    ProbabilityStream::new(rate, start, p).map_err(|e| Error::Sidecar(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{future_activity_labels, VadTrack};
    use crate::vocoder::analyze;

    #[test]
    fn frames_round_trip() {
        let fx = crate::synth::speech_like(&Default::default(), 2);
        let frames = analyze(&fx.wave, &VocoderConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_frames(&mut buf, &frames).unwrap();
        assert_eq!(&buf[..4], FRAMES_MAGIC);
        assert_eq!(read_frames(buf.as_slice()).unwrap(), frames);
    }

    #[test]
    fn truncated_and_foreign_files_are_rejected() {
        let s = ProbabilityStream::new(20.0, 0.0, vec![0.1, 0.2]).unwrap();
        let mut buf = Vec::new();
        write_stream(&mut buf, &s).unwrap();
        assert!(read_stream(&buf[..buf.len() - 3]).is_err());
        assert!(read_frames(buf.as_slice()).is_err());
        assert_eq!(read_stream(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn labels_round_trip() {
        let mut vad = VadTrack::silent(700);
        for f in 100..350 {
            vad.active[1][f] = true;
        }
        for f in 300..500 {
            vad.active[0][f] = true;
        }
        let labels = future_activity_labels(&vad);
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);
    }
}
