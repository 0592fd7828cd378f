//! Session manifest: `session_id,wav_ch0_path,wav_ch1_path,words_path,fold,split`.
//!
//! Relative paths are resolved against the manifest's directory. Files are
//! not opened here; a missing file becomes an error for that session only.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

pub const N_FOLDS: usize = 5;
pub const MANIFEST_HEADER: &str = "session_id,wav_ch0_path,wav_ch1_path,words_path,fold,split";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRow {
    pub session_id: String,
    pub wav: [PathBuf; 2],
    pub words: PathBuf,
    pub fold: usize,
    pub split: Split,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    session_id: String,
    wav_ch0_path: PathBuf,
    wav_ch1_path: PathBuf,
    words_path: PathBuf,
    fold: usize,
    split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionManifest {
    pub rows: Vec<SessionRow>,
}

impl SessionManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).with_context(|| format!("manifest {}", path.display()))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let mut rows = Vec::new();
        let mut ids = HashSet::new();
        for (i, rec) in reader.deserialize::<RawRow>().enumerate() {
            let r = rec.with_context(|| format!("row {}", i + 2))?;
            if r.session_id.is_empty() {
                bail!("row {}: empty session_id", i + 2);
            }
            if r.fold >= N_FOLDS {
                bail!("row {}: fold {} outside 0..{}", i + 2, r.fold, N_FOLDS - 1);
            }
            if !ids.insert(r.session_id.clone()) {
                bail!("row {}: duplicate session_id {:?}", i + 2, r.session_id);
            }
            rows.push(SessionRow {
                session_id: r.session_id,
                wav: [resolve(r.wav_ch0_path), resolve(r.wav_ch1_path)],
                words: resolve(r.words_path),
                fold: r.fold,
                split: r.split,
            });
        }
        if rows.is_empty() {
            bail!("no sessions");
        }
        Ok(Self { rows })
    }

    pub fn has_test_split(&self) -> bool {
        self.rows.iter().any(|r| r.split == Split::Test)
    }

    /// Validation and test session ids for cross-validation fold `k`.
    ///
    /// With a held-out test split, fold `k` validates on the non-test
    /// sessions assigned to fold `k` and tests on the whole test split.
    /// Without one, fold `k` tests on fold `k` and validates on fold
    /// `k + 1 (mod 5)`.
    pub fn fold_partition(&self, k: usize) -> (Vec<&str>, Vec<&str>) {
        let ids = |pred: &dyn Fn(&SessionRow) -> bool| -> Vec<&str> {
            self.rows.iter().filter(|r| pred(r)).map(|r| r.session_id.as_str()).collect()
        };
        if self.has_test_split() {
            (
                ids(&|r| r.split != Split::Test && r.fold == k),
                ids(&|r| r.split == Split::Test),
            )
        } else {
            (ids(&|r| r.fold == (k + 1) % N_FOLDS), ids(&|r| r.fold == k))
        }
    }

    /// Every fold must have validation and test sessions.
    pub fn check_folds(&self) -> Result<()> {
        for k in 0..N_FOLDS {
            let (val, test) = self.fold_partition(k);
            if val.is_empty() || test.is_empty() {
                bail!("fold {k} has no validation or no test sessions; folds 0..4 must all be populated");
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.session_id,
                r.wav[0].display(),
                r.wav[1].display(),
                r.words.display(),
                r.fold,
                r.split
            ));
        }
        s
    }
}
