//! Run directory, worker pool, per-session error isolation and loaders
//! shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use turncue::eval::ProbabilityStream;
use turncue::events::{extract_events, sample_midturn, words_to_vad, read_words, MidTurnPoint, TurnEvent, VadTrack, WordToken};
use turncue::seed::derive_seed;
use turncue::{Waveform, PIPELINE_SAMPLE_RATE};

use crate::config::RunConfig;
use crate::manifest::SessionRow;

/// A failure confined to one session (and optionally one condition).
#[derive(Debug, Clone, PartialEq)]
pub struct SessionError {
    pub session_id: String,
    pub stage: String,
    pub message: String,
}

pub struct Run {
    pub config: RunConfig,
    pub hash: String,
    pub dir: PathBuf,
    pool: rayon::ThreadPool,
}

impl Run {
    /// Create `<out>/run-<hash>/` and record the canonical config there.
    pub fn new(config: RunConfig) -> Result<Self> {
        let hash = config.hash();
        let dir = config.out.join(format!("run-{hash}"));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("config.txt"), config.canonical_text())?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
        Ok(Self {
            config,
            hash,
            dir,
            pool,
        })
    }

    /// `<run>/<name>/`, created on demand.
    pub fn stage_dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.dir.join(name);
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Ok(d)
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Apply `f` to every session in parallel, keeping manifest order.
    pub fn per_session<T: Send>(
        &self,
        rows: &[SessionRow],
        f: impl Fn(&SessionRow) -> Result<T> + Sync + Send,
    ) -> Vec<(String, Result<T>)> {
        self.install(|| {
            rows.par_iter()
                .map(|r| (r.session_id.clone(), f(r)))
                .collect()
        })
    }

    /// Prefix every line with the config hash column.
    pub fn hashed(&self, csv: &str) -> String {
        with_hash(csv, &self.hash)
    }

    /// Write `errors.csv` for a stage and log each entry.
    pub fn write_errors(&self, dir: &Path, errors: &[SessionError]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["config_hash", "session_id", "stage", "message"])?;
        for e in errors {
            log::error!("session {}: {}: {}", e.session_id, e.stage, e.message);
            w.write_record([self.hash.as_str(), &e.session_id, &e.stage, &e.message])?;
        }
        std::fs::write(dir.join("errors.csv"), w.into_inner()?)?;
        Ok(())
    }
}

pub fn with_hash(csv: &str, hash: &str) -> String {
    let mut out = String::with_capacity(csv.len() + 20 * csv.lines().count());
    for (i, line) in csv.lines().enumerate() {
        out.push_str(if i == 0 { "config_hash" } else { hash });
        out.push(',');
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Split per-session results into successes and error records.
pub fn partition<T>(results: Vec<(String, Result<T>)>, stage: &str) -> (Vec<(String, T)>, Vec<SessionError>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => errors.push(SessionError {
                session_id: id,
                stage: stage.to_string(),
                message: format!("{e:#}"),
            }),
        }
    }
    (ok, errors)
}

pub fn load_wav(path: &Path) -> Result<Waveform> {
    let w = Waveform::read_wav(path).with_context(|| format!("reading {}", path.display()))?;
    w.require_rate(PIPELINE_SAMPLE_RATE)
        .with_context(|| format!("{}", path.display()))?;
    Ok(w)
}

pub fn load_audio(row: &SessionRow) -> Result<[Waveform; 2]> {
    Ok([load_wav(&row.wav[0])?, load_wav(&row.wav[1])?])
}

pub fn load_words(row: &SessionRow) -> Result<Vec<WordToken>> {
    read_words(&row.words).with_context(|| format!("reading {}", row.words.display()))
}

/// Every `.wav` in a directory, sorted by file name.
pub fn load_wav_dir(dir: &Path) -> Result<Vec<Waveform>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_wav(p)).collect()
}

/// Activity, events and mid-turn points of one session.
#[derive(Debug, Clone)]
pub struct SessionEvents {
    pub vad: VadTrack,
    pub events: Vec<TurnEvent>,
    pub midturn: Vec<MidTurnPoint>,
}

/// The activity track spans the longer channel.
pub fn session_events(session_id: &str, words: &[WordToken], audio: &[Waveform; 2], cfg: &RunConfig) -> Result<SessionEvents> {
    let duration = audio[0].duration_s().max(audio[1].duration_s());
    let vad = words_to_vad(words, cfg.bridge_ms, Some(duration))?;
    let events = extract_events(&vad, &cfg.events);
    let midturn = sample_midturn(&vad, &events, &cfg.midturn, derive_seed(cfg.seed, &format!("midturn/{session_id}")));
    Ok(SessionEvents { vad, events, midturn })
}

/// `<dir>/<tag>/<session>.csv`, or the binary `.tcps` sidecar.
pub fn load_stream(dir: &Path, tag: &str, session_id: &str) -> Result<ProbabilityStream> {
    let base = dir.join(tag);
    let csv_path = base.join(format!("{session_id}.csv"));
    if csv_path.exists() {
        let text = std::fs::read_to_string(&csv_path)?;
        return ProbabilityStream::from_csv(&text, &csv_path).with_context(|| format!("{}", csv_path.display()));
    }
    let bin = base.join(format!("{session_id}.tcps"));
    let f = std::fs::File::open(&bin).with_context(|| {
        format!("no probability stream: neither {} nor {} exists", csv_path.display(), bin.display())
    })?;
    turncue::sidecar::read_stream(std::io::BufReader::new(f)).with_context(|| format!("{}", bin.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_column_is_prepended() {
        assert_eq!(with_hash("a,b\n1,2\n", "h"), "config_hash,a,b\nh,1,2\n");
    }
}
