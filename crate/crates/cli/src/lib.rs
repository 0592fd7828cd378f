//! Batch pipeline over a session manifest: analysis, manipulation, event
//! extraction, scoring, reporting, WER and the prosody classifier.

pub mod config;
pub mod manifest;
pub mod run;
pub mod selftest;
pub mod stages;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{ConfigError, RunConfig};
use manifest::SessionManifest;
use run::Run;

#[derive(Debug, Parser)]
#[command(name = "turncue", version, about = "Prosody/lexical cue isolation and turn-taking evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Session manifest CSV.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Parent of the run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated condition names; `name@snr` sweeps the SNR grid.
    #[arg(long, global = true)]
    pub conditions: Option<String>,
    /// `start:stop:step` or a comma-separated list, in dB.
    #[arg(long = "snr-grid", global = true, allow_hyphen_values = true)]
    pub snr_grid: Option<String>,
    #[arg(long, global = true, value_parser = ["pre-silence", "in-silence"])]
    pub anchor: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Vocoder analysis of every channel to binary sidecars.
    Analyze,
    /// Write every configured condition as condition-suffixed WAVs.
    Manipulate,
    /// Assign training sessions to clean or manipulated audio.
    MixPlan,
    /// Shift/hold events and mid-turn points.
    Events,
    /// Future-activity label sidecars.
    Labels,
    /// Score probability streams at events.
    Score,
    /// Threshold tuning and 5-fold metric reports.
    Report,
    /// Word error rate of external transcripts.
    Wer,
    /// Train the prosody-only classifier and emit its streams.
    ProsodyTrain,
    /// Synthetic end-to-end run of the whole pipeline.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Manipulate => "manipulate",
            Command::MixPlan => "mix-plan",
            Command::Events => "events",
            Command::Labels => "labels",
            Command::Score => "score",
            Command::Report => "report",
            Command::Wer => "wer",
            Command::ProsodyTrain => "prosody-train",
            Command::Selftest => "selftest",
        }
    }
}

/// Defaults, then the config file, then command-line flags.
pub fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let flags = [
        ("seed", cli.seed.map(|s| s.to_string())),
        ("workers", cli.workers.map(|w| w.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("conditions", cli.conditions.clone()),
        ("snr_grid", cli.snr_grid.clone()),
        ("anchor", cli.anchor.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug)]
pub struct Outcome {
    pub run_dir: PathBuf,
    pub failed_sessions: usize,
}

/// Run one subcommand. Config and manifest problems are returned as
/// errors; session failures are counted in the outcome.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = build_config(cli)?;
    let manifest = match cli.command {
        Command::Selftest => None,
        _ => {
            let path = cli.manifest.as_ref().context("--manifest is required for this subcommand")?;
            Some(SessionManifest::read(path)?)
        }
    };
    let run = Run::new(cfg)?;
    log::info!("{}: run directory {}", cli.command.name(), run.dir.display());
    let m = || manifest.as_ref().expect("manifest loaded");
    let errors = match cli.command {
        Command::Analyze => stages::analyze_stage(&run, m())?,
        Command::Manipulate => stages::manipulate_stage(&run, m())?,
        Command::MixPlan => stages::mix_plan_stage(&run, m())?,
        Command::Events => stages::events_stage(&run, m())?,
        Command::Labels => stages::labels_stage(&run, m())?,
        Command::Score => stages::score_stage(&run, m())?,
        Command::Report => stages::report_stage(&run, m())?,
        Command::Wer => stages::wer_stage(&run, m())?,
        Command::ProsodyTrain => stages::prosody_train_stage(&run, m())?,
        Command::Selftest => selftest::selftest_stage(&run)?,
    };
    let mut failed: Vec<&str> = errors.iter().map(|e| e.session_id.as_str()).collect();
    failed.sort_unstable();
    failed.dedup();
    if !failed.is_empty() {
        log::error!("{} session(s) failed: {}", failed.len(), failed.join(", "));
    }
    Ok(Outcome {
        run_dir: run.dir,
        failed_sessions: failed.len(),
    })
}
