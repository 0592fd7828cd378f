//! End-to-end self-test on a synthetic planted-cue corpus.
//!
//! Writes the corpus and a manifest to disk, trains the prosody classifier
//! on a second synthetic corpus, applies every configured condition, turns
//! the classifier output into probability streams, adds two stub streams
//! (separable and constant) and builds the 5-fold report from the files
//! on disk through the same code path as `report`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rand::Rng;
use turncue::eval::{Anchor, ProbabilityStream};
use turncue::events::TurnKind;
use turncue::manipulate::{envelope_correlation, voiced_f0_std};
use turncue::prosody::{event_features, prosody_stream, synth_cue_corpus, CueCorpusOptions, CueSession, FeatureExtractor};
use turncue::seed::{derive_seed, rng};
use turncue::vocoder::analyze;
use turncue::{VocoderFrames, WordToken};

use crate::config::Cell;
use crate::manifest::{SessionManifest, MANIFEST_HEADER, N_FOLDS};
use crate::run::{load_audio, load_words, partition, session_events, Run, SessionError, SessionEvents};
use crate::stages::{build_reports, manipulate_cell, score_cells, train_prosody, write_reports, NoiseMaterial};

pub const ORACLE_STUB: &str = "stub-oracle";
pub const CONSTANT_STUB: &str = "stub-constant";
const TRAIN_SESSIONS: usize = 5;

fn words_jsonl(words: &[WordToken]) -> Result<String> {
    let mut s = String::new();
    for w in words {
        let obj = serde_json::json!({
            "text": w.text,
            "start": w.start_s,
            "end": w.end_s,
            "channel": w.channel,
        });
        s.push_str(&serde_json::to_string(&obj)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_corpus(dir: &Path, corpus: &[CueSession]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    for (i, s) in corpus.iter().enumerate() {
        for (c, w) in s.channels.iter().enumerate() {
            w.write_wav(dir.join(format!("{}_ch{c}.wav", s.id)))?;
        }
        std::fs::write(dir.join(format!("{}.jsonl", s.id)), words_jsonl(&s.words)?)?;
        let _ = writeln!(
            manifest,
            "{id},{id}_ch0.wav,{id}_ch1.wav,{id}.jsonl,{},train",
            i % N_FOLDS,
            id = s.id
        );
    }
    std::fs::write(dir.join("manifest.csv"), manifest)?;
    Ok(())
}

/// Stream that is near 1 (seeded jitter) exactly in the scoring windows of
/// shifts and 0 elsewhere.
fn oracle_stream(run: &Run, session_id: &str, ev: &SessionEvents) -> Result<ProbabilityStream> {
    let cfg = &run.config;
    let rate = cfg.stream_rate_hz;
    let n = (ev.vad.duration_s() * rate).ceil() as usize;
    let mut r = rng(derive_seed(cfg.seed, &format!("stub/{session_id}")));
    let mut p = vec![0.0; n];
    let n_win = (cfg.window_ms * rate / 1000.0).round() as usize;
    for e in ev.events.iter().filter(|e| e.kind == TurnKind::Shift) {
        let pos = (e.silence_start_s * rate - 1e-6).ceil() as usize;
        let range = match cfg.anchor {
            Anchor::PreSilence => pos.saturating_sub(n_win)..pos,
            Anchor::InSilence => pos..pos + n_win,
        };
        for j in range.filter(|j| *j < n) {
            p[j] = 1.0 - r.random_range(0.0..0.05);
        }
    }
    Ok(ProbabilityStream::new(rate, 0.0, p)?)
}

fn analyze_pair(run: &Run, chans: &[turncue::Waveform]) -> Result<[VocoderFrames; 2]> {
    Ok([analyze(&chans[0], &run.config.vocoder)?, analyze(&chans[1], &run.config.vocoder)?])
}

fn train_model(run: &Run) -> Result<turncue::prosody::LogisticModel> {
    let cfg = &run.config;
    let opts = CueCorpusOptions {
        n_sessions: TRAIN_SESSIONS,
        config: cfg.vocoder.clone(),
        ..Default::default()
    };
    let corpus = run.install(|| synth_cue_corpus(&opts, derive_seed(cfg.seed, "selftest/train")))?;
    let mut data = Vec::new();
    for s in &corpus {
        let ev = session_events(&s.id, &s.words, &s.channels, cfg)?;
        let frames = run.install(|| analyze_pair(run, &s.channels))?;
        data.extend(event_features([&frames[0], &frames[1]], &ev.vad, &ev.events, cfg.prosody_window_s)?);
    }
    train_prosody(run, &data)
}

fn level_std(frames: &VocoderFrames) -> f64 {
    let l: Vec<f64> = frames
        .levels_db()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !frames.is_silent(*i))
        .map(|(_, v)| v)
        .collect();
    if l.is_empty() {
        return 0.0;
    }
    let m = l.iter().sum::<f64>() / l.len() as f64;
    (l.iter().map(|v| (v - m).powi(2)).sum::<f64>() / l.len() as f64).sqrt()
}

pub fn selftest_stage(run: &Run) -> Result<Vec<SessionError>> {
    let cfg = &run.config;
    let dir = run.stage_dir("selftest")?;
    let corpus_dir = dir.join("corpus");
    let opts = CueCorpusOptions {
        n_sessions: cfg.selftest_sessions,
        config: cfg.vocoder.clone(),
        ..Default::default()
    };
    let corpus = run.install(|| synth_cue_corpus(&opts, derive_seed(cfg.seed, "selftest/eval")))?;
    write_corpus(&corpus_dir, &corpus)?;
    drop(corpus);
    let manifest = SessionManifest::read(&corpus_dir.join("manifest.csv"))?;

    let model = train_model(run).context("training the prosody model")?;
    std::fs::write(dir.join("model.txt"), model.to_text())?;

    let cells = cfg.cells();
    let material = NoiseMaterial::load(run, &manifest, &cells)?;
    let streams_dir = dir.join("streams");
    let stubs = [ORACLE_STUB, CONSTANT_STUB].map(|c| Cell {
        condition: c.to_string(),
        snr_db: None,
    });
    for c in cells.iter().chain(&stubs) {
        std::fs::create_dir_all(streams_dir.join(c.tag()))?;
    }

    let results = run.per_session(&manifest.rows, |row| {
        let id = row.session_id.as_str();
        let audio = load_audio(row)?;
        let words = load_words(row)?;
        let ev = session_events(id, &words, &audio, cfg)?;
        let clean = analyze_pair(run, &audio)?;
        let babble = material.babble_for(id);
        let mut measures = String::new();
        for cell in &cells {
            let chans = manipulate_cell(run, id, &audio, &words, cell, &material, &babble)
                .with_context(|| format!("condition {}", cell.tag()))?;
            let frames = analyze_pair(run, &chans)?;
            for c in 0..2 {
                let _ = writeln!(
                    measures,
                    "{id},{},{},{c},{:.4},{:.4},{:.4}",
                    cell.condition,
                    cell.snr_db.map(|s| format!("{s}")).unwrap_or_default(),
                    voiced_f0_std(&frames[c].f0),
                    level_std(&frames[c]),
                    envelope_correlation(&clean[c], &frames[c])?
                );
            }
            let ex = [FeatureExtractor::new(&frames[0], &ev.vad, 0)?, FeatureExtractor::new(&frames[1], &ev.vad, 1)?];
            let s = prosody_stream(&model, [&ex[0], &ex[1]], &ev.vad, cfg.stream_rate_hz, cfg.prosody_window_s)?;
            std::fs::write(streams_dir.join(cell.tag()).join(format!("{id}.csv")), run.hashed(&s.to_csv()))?;
        }
        let oracle = oracle_stream(run, id, &ev)?;
        std::fs::write(streams_dir.join(ORACLE_STUB).join(format!("{id}.csv")), run.hashed(&oracle.to_csv()))?;
        let constant = ProbabilityStream::constant(cfg.stream_rate_hz, oracle.len(), 0.5)?;
        std::fs::write(streams_dir.join(CONSTANT_STUB).join(format!("{id}.csv")), run.hashed(&constant.to_csv()))?;
        Ok((ev, measures))
    });
    let (ok, mut errors) = partition(results, "selftest");

    let ev: Vec<_> = ok.iter().map(|(id, (s, _))| (id.clone(), s.events.clone())).collect();
    let mt: Vec<_> = ok.iter().map(|(id, (s, _))| (id.clone(), s.midturn.clone())).collect();
    std::fs::write(dir.join("events.csv"), run.hashed(&turncue::events::events_csv(&ev)))?;
    std::fs::write(dir.join("midturn.csv"), run.hashed(&turncue::events::midturn_csv(&mt)))?;
    let mut measures = String::from("session_id,condition,snr_db,channel,voiced_f0_std_hz,active_level_std_db,envelope_corr\n");
    ok.iter().for_each(|(_, (_, m))| measures.push_str(m));
    std::fs::write(dir.join("measures.csv"), run.hashed(&measures))?;

    let all_cells: Vec<Cell> = cells.iter().chain(&stubs).cloned().collect();
    let (scores, score_errors) = score_cells(run, &manifest, &all_cells, &streams_dir);
    errors.extend(score_errors);
    let report_dir = run.stage_dir("selftest/report")?;
    let reports = build_reports(&manifest, &scores)?;
    write_reports(run, &report_dir, &reports)?;

    let mut summary = String::new();
    for r in &reports {
        for a in &r.aggregates {
            let _ = writeln!(
                summary,
                "{} {} {}: bal_acc {:.3} (95% CI {:.3}..{:.3}), f1_w {:.3}, {} shift / {} other",
                a.metric_set.as_str(),
                a.condition,
                a.snr_db.map(|s| format!("{s} dB")).unwrap_or_else(|| "-".into()),
                a.mean.bal_acc,
                a.bal_acc_ci.0,
                a.bal_acc_ci.1,
                a.mean.f1_weighted,
                a.n_shift,
                a.n_hold
            );
        }
    }
    std::fs::write(dir.join("summary.txt"), &summary)?;
    for line in summary.lines() {
        log::info!("{line}");
    }
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}
