//! Flat `key = value` run configuration.
//!
//! Unknown keys, duplicate keys and unparsable values are errors. The
//! canonical rendering ([`RunConfig::canonical_text`]) lists every key that
//! can change results in a fixed order; its SHA-256 is the config hash that
//! names the run directory and is stamped into every CSV. `out` and
//! `workers` only affect where and how fast a run happens, so they are left
//! out of the hash.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;
use turncue::eval::Anchor;
use turncue::events::{EventOptions, MidTurnOptions};
use turncue::manipulate::{ConditionSpec, ScopeMode, CONDITION_NAMES, TABLE_CONDITIONS};
use turncue::prosody::TrainOptions;
use turncue::VocoderConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: line {line}: {msg}")]
    Syntax { origin: String, line: usize, msg: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {0:?} given twice")]
    Duplicate(String),
    #[error("config key {key:?}: {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One requested condition. Sweeps expand over the SNR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEntry {
    pub name: String,
    pub sweep: bool,
}

impl ConditionEntry {
    /// `name` or `name@snr`. Background-noise conditions always sweep;
    /// `noise-pi@snr` mixes prosody-matched noise into the speech.
    pub fn parse(s: &str) -> Result<Self, String> {
        let (name, sweep) = match s.strip_suffix("@snr") {
            Some(n) => (n, true),
            None => (s, ConditionSpec::takes_snr(s)),
        };
        if !CONDITION_NAMES.contains(&name) {
            return Err(format!(
                "unknown condition {name:?}; expected one of {}",
                CONDITION_NAMES.join(", ")
            ));
        }
        if sweep && !(ConditionSpec::takes_snr(name) || name == "noise-pi") {
            return Err(format!("condition {name:?} cannot be mixed at an SNR"));
        }
        Ok(Self {
            name: name.to_string(),
            sweep,
        })
    }

    pub fn render(&self) -> String {
        if self.sweep && !ConditionSpec::takes_snr(&self.name) {
            format!("{}@snr", self.name)
        } else {
            self.name.clone()
        }
    }
}

/// A concrete (condition, SNR) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub condition: String,
    pub snr_db: Option<f64>,
}

impl Cell {
    pub fn spec(&self, seed: u64) -> turncue::Result<ConditionSpec> {
        ConditionSpec::from_name(&self.condition, self.snr_db, seed)
    }

    /// Directory / file-name tag, e.g. `babble_snr-2.5`.
    pub fn tag(&self) -> String {
        match self.snr_db {
            Some(s) => format!("{}_snr{s}", self.condition),
            None => self.condition.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
    pub conditions: Vec<ConditionEntry>,
    pub snr_grid: Vec<f64>,
    pub anchor: Anchor,
    pub window_ms: f64,
    pub bridge_ms: f64,
    pub events: EventOptions,
    pub midturn: MidTurnOptions,
    pub scope: ScopeMode,
    pub vocoder: VocoderConfig,
    pub babble_overlap: usize,
    pub babble_dir: Option<PathBuf>,
    pub music_dir: Option<PathBuf>,
    pub stream_dir: Option<PathBuf>,
    pub hyp_dir: Option<PathBuf>,
    pub clean_fraction: f64,
    pub mix_condition: String,
    pub stream_rate_hz: f64,
    pub prosody_window_s: f64,
    pub train: TrainOptions,
    pub selftest_sessions: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 0,
            out: PathBuf::from("runs"),
            conditions: TABLE_CONDITIONS
                .iter()
                .map(|n| ConditionEntry {
                    name: n.to_string(),
                    sweep: false,
                })
                .collect(),
            snr_grid: parse_snr_grid("-10:10:2.5").expect("default grid"),
            anchor: Anchor::PreSilence,
            window_ms: 200.0,
            bridge_ms: 100.0,
            events: EventOptions::default(),
            midturn: MidTurnOptions::default(),
            scope: ScopeMode::default(),
            vocoder: VocoderConfig::default(),
            babble_overlap: 6,
            babble_dir: None,
            music_dir: None,
            stream_dir: None,
            hyp_dir: None,
            clean_fraction: 0.75,
            mix_condition: "noise-pi".into(),
            stream_rate_hz: 20.0,
            prosody_window_s: turncue::prosody::DEFAULT_WINDOW_S,
            train: TrainOptions::default(),
            selftest_sessions: 10,
        }
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("bad SNR value {v:?}"))
    };
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, st] = parts[..] else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let (a, b, st) = (num(a)?, num(b)?, num(st)?);
        if !(st > 0.0) || b < a {
            return Err(format!("empty SNR range {s:?}"));
        }
        let n = ((b - a) / st + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * st).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("empty SNR grid".into());
    }
    Ok(grid)
}

fn parse_scope(s: &str) -> Result<ScopeMode, String> {
    let arg = |v: &str| {
        v.parse::<f64>()
            .ok()
            .filter(|x| *x > 0.0 && x.is_finite())
            .ok_or_else(|| format!("bad scope argument {v:?}"))
    };
    match s.split_once(':') {
        None if s == "whole" => Ok(ScopeMode::Whole),
        None if s == "ipu" => Ok(ScopeMode::default()),
        Some(("ipu", v)) => Ok(ScopeMode::Ipu(arg(v)?)),
        Some(("window", v)) => Ok(ScopeMode::Window(arg(v)?)),
        _ => Err(format!("expected whole, ipu[:bridge_ms] or window:seconds, got {s:?}")),
    }
}

fn render_scope(s: ScopeMode) -> String {
    match s {
        ScopeMode::Whole => "whole".into(),
        ScopeMode::Ipu(b) => format!("ipu:{b}"),
        ScopeMode::Window(w) => format!("window:{w}"),
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.into(),
        msg: format!("{v:?}: {e}"),
    })
}

fn finite(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::Value {
            key: key.into(),
            msg: "must be finite".into(),
        })
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn render_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let v = v.trim();
        let value_err = |msg: String| ConfigError::Value { key: key.into(), msg };
        match key {
            "seed" => self.seed = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "conditions" => {
                self.conditions = v
                    .split(',')
                    .map(|c| ConditionEntry::parse(c.trim()))
                    .collect::<Result<_, _>>()
                    .map_err(value_err)?;
                if self.conditions.is_empty() {
                    return Err(ConfigError::Value {
                        key: key.into(),
                        msg: "no conditions".into(),
                    });
                }
            }
            "snr_grid" => self.snr_grid = parse_snr_grid(v).map_err(value_err)?,
            "anchor" => self.anchor = parse(key, v)?,
            "window_ms" => self.window_ms = finite(key, v)?,
            "bridge_ms" => self.bridge_ms = finite(key, v)?,
            "min_silence_ms" => self.events.min_silence_ms = finite(key, v)?,
            "context_s" => self.events.context_s = finite(key, v)?,
            "margin_s" => self.midturn.margin_s = finite(key, v)?,
            "stride_s" => self.midturn.stride_s = finite(key, v)?,
            "balance_midturn" => self.midturn.balance = parse(key, v)?,
            "scope" => self.scope = parse_scope(v).map_err(value_err)?,
            "vocoder.frame_period_ms" => self.vocoder.frame_period_ms = finite(key, v)?,
            "vocoder.fft_size" => self.vocoder.fft_size = parse(key, v)?,
            "vocoder.analysis_window_s" => self.vocoder.analysis_window_s = finite(key, v)?,
            "vocoder.f0_floor_hz" => self.vocoder.f0_floor_hz = finite(key, v)?,
            "vocoder.f0_ceil_hz" => self.vocoder.f0_ceil_hz = finite(key, v)?,
            "vocoder.energy_floor_db" => self.vocoder.energy_floor_db = finite(key, v)?,
            "vocoder.voicing_threshold" => self.vocoder.voicing_threshold = finite(key, v)?,
            "babble_overlap" => self.babble_overlap = parse(key, v)?,
            "babble_dir" => self.babble_dir = opt_path(v),
            "music_dir" => self.music_dir = opt_path(v),
            "stream_dir" => self.stream_dir = opt_path(v),
            "hyp_dir" => self.hyp_dir = opt_path(v),
            "clean_fraction" => self.clean_fraction = finite(key, v)?,
            "mix_condition" => {
                ConditionEntry::parse(v).map_err(value_err)?;
                self.mix_condition = v.to_string();
            }
            "stream_rate_hz" => self.stream_rate_hz = finite(key, v)?,
            "prosody_window_s" => self.prosody_window_s = finite(key, v)?,
            "train.learning_rate" => self.train.learning_rate = finite(key, v)?,
            "train.l2" => self.train.l2 = finite(key, v)?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "selftest_sessions" => self.selftest_sessions = parse(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Apply `key = value` lines over the current values. `#` starts a
    /// comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    origin: origin.into(),
                    line: i + 1,
                    msg: format!("expected key = value, got {line:?}"),
                });
            };
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(ConfigError::Duplicate(k.into()));
            }
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Cross-field checks, run once all sources are applied.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| {
            Err(ConfigError::Value {
                key: key.into(),
                msg: msg.into(),
            })
        };
        if let Err(e) = self.vocoder.validate() {
            return bad("vocoder", &e.to_string());
        }
        if !(self.window_ms > 0.0) {
            return bad("window_ms", "must be positive");
        }
        if self.bridge_ms < 0.0 || self.events.min_silence_ms < 0.0 || self.events.context_s < 0.0 {
            return bad("events", "bridge_ms, min_silence_ms and context_s must be non-negative");
        }
        if !(self.midturn.stride_s > 0.0) || self.midturn.margin_s < 0.0 {
            return bad("stride_s", "stride must be positive and margin non-negative");
        }
        if !(self.clean_fraction > 0.0 && self.clean_fraction < 1.0) {
            return bad("clean_fraction", "must lie strictly between 0 and 1");
        }
        if !(self.stream_rate_hz > 0.0) || !(self.prosody_window_s > 0.0) {
            return bad("stream_rate_hz", "stream rate and prosody window must be positive");
        }
        if self.babble_overlap == 0 {
            return bad("babble_overlap", "must be at least 1");
        }
        if self.selftest_sessions < 5 {
            return bad("selftest_sessions", "need at least 5 sessions for 5 folds");
        }
        Ok(())
    }

    /// Every (condition, SNR) cell in request order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for c in &self.conditions {
            if c.sweep {
                cells.extend(self.snr_grid.iter().map(|s| Cell {
                    condition: c.name.clone(),
                    snr_db: Some(*s),
                }));
            } else {
                cells.push(Cell {
                    condition: c.name.clone(),
                    snr_db: None,
                });
            }
        }
        cells
    }

    /// Result-affecting settings, one `key = value` per line.
    pub fn canonical_text(&self) -> String {
        let v = &self.vocoder;
        let grid: Vec<String> = self.snr_grid.iter().map(|s| format!("{s}")).collect();
        let conds: Vec<String> = self.conditions.iter().map(ConditionEntry::render).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("conditions", conds.join(",")),
            ("snr_grid", grid.join(",")),
            ("anchor", self.anchor.as_str().into()),
            ("window_ms", format!("{}", self.window_ms)),
            ("bridge_ms", format!("{}", self.bridge_ms)),
            ("min_silence_ms", format!("{}", self.events.min_silence_ms)),
            ("context_s", format!("{}", self.events.context_s)),
            ("margin_s", format!("{}", self.midturn.margin_s)),
            ("stride_s", format!("{}", self.midturn.stride_s)),
            ("balance_midturn", self.midturn.balance.to_string()),
            ("scope", render_scope(self.scope)),
            ("vocoder.frame_period_ms", format!("{}", v.frame_period_ms)),
            ("vocoder.fft_size", v.fft_size.to_string()),
            ("vocoder.analysis_window_s", format!("{}", v.analysis_window_s)),
            ("vocoder.f0_floor_hz", format!("{}", v.f0_floor_hz)),
            ("vocoder.f0_ceil_hz", format!("{}", v.f0_ceil_hz)),
            ("vocoder.energy_floor_db", format!("{}", v.energy_floor_db)),
            ("vocoder.voicing_threshold", format!("{}", v.voicing_threshold)),
            ("babble_overlap", self.babble_overlap.to_string()),
            ("babble_dir", render_path(&self.babble_dir)),
            ("music_dir", render_path(&self.music_dir)),
            ("stream_dir", render_path(&self.stream_dir)),
            ("hyp_dir", render_path(&self.hyp_dir)),
            ("clean_fraction", format!("{}", self.clean_fraction)),
            ("mix_condition", self.mix_condition.clone()),
            ("stream_rate_hz", format!("{}", self.stream_rate_hz)),
            ("prosody_window_s", format!("{}", self.prosody_window_s)),
            ("train.learning_rate", format!("{}", self.train.learning_rate)),
            ("train.l2", format!("{}", self.train.l2)),
            ("train.epochs", self.train.epochs.to_string()),
            ("selftest_sessions", self.selftest_sessions.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_nine_levels() {
        let g = RunConfig::default().snr_grid;
        assert_eq!(g, vec![-10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(parse_snr_grid("0,5").unwrap(), vec![0.0, 5.0]);
        assert!(parse_snr_grid("1:0:1").is_err());
        assert!(parse_snr_grid("a").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("seed = 9\nconditions = clean, babble, noise-pi@snr\nscope = window:30 # per window\n", "t")
            .unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.canonical_text(), "canon").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.cells().len(), 1 + 9 + 9);
    }

    #[test]
    fn hash_ignores_execution_settings() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.set("out", "/elsewhere").unwrap();
        b.set("workers", "3").unwrap();
        assert_eq!(a.hash(), b.hash());
        b.set("seed", "1").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn malformed_config_is_rejected() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.apply_text("nonsense", "t"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(cfg.apply_text("colour = red", "t"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(cfg.apply_text("seed = 1\nseed = 2", "t"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(cfg.apply_text("seed = -1", "t"), Err(ConfigError::Value { .. })));
        assert!(cfg.apply_text("conditions = flat-p@snr", "t").is_err());
        assert!(cfg.apply_text("anchor = middle", "t").is_err());
    }
}
