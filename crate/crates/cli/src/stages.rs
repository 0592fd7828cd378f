//! One function per subcommand. Each returns the per-session error
//! records; anything returned as `Err` aborts the stage.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use turncue::eval::{
    build_report, figure_csv, figure_from_report, figure_from_wer, fold_ttest, merge_report_csvs, score_session,
    wer, EvalReport, FoldInput, MetricSet, ScoredEvent, TTestKind, WerObservation,
};
use turncue::events::{events_csv, future_activity_labels, midturn_csv, TurnKind};
use turncue::manipulate::{apply_condition, plan_mixed_training, ConditionSpec, NoiseContext};
use turncue::prosody::{event_features, prosody_stream, train_logistic, FeatureExtractor, LogisticModel, ProsodyFeatures, FEATURE_NAMES};
use turncue::vocoder::analyze;
use turncue::{eval::classification_metrics, Waveform};

use crate::config::Cell;
use crate::manifest::{SessionManifest, Split, N_FOLDS};
use crate::run::{load_audio, load_stream, load_wav_dir, load_words, partition, session_events, Run, SessionError};

fn fmt_snr(s: Option<f64>) -> String {
    s.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn analyze_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let dir = run.stage_dir("analyze")?;
    let cfg = &run.config;
    let results = run.per_session(&manifest.rows, |row| {
        let audio = load_audio(row)?;
        let mut lines = String::new();
        for (c, w) in audio.iter().enumerate() {
            let frames = analyze(w, &cfg.vocoder).with_context(|| format!("analysing channel {c}"))?;
            let path = dir.join(format!("{}_ch{c}.tcvf", row.session_id));
            let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            turncue::sidecar::write_frames(std::io::BufWriter::new(file), &frames)?;
            let mut voiced: Vec<f64> = frames.f0.voiced_values().collect();
            voiced.sort_by(f64::total_cmp);
            let median = voiced.get(voiced.len() / 2).copied().unwrap_or(0.0);
            let levels: Vec<f64> = frames
                .levels_db()
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !frames.is_silent(*i))
                .map(|(_, l)| l)
                .collect();
            let mean_db = if levels.is_empty() {
                f64::NAN
            } else {
                levels.iter().sum::<f64>() / levels.len() as f64
            };
            let _ = writeln!(
                lines,
                "{},{c},{},{:.4},{median:.2},{mean_db:.2}",
                row.session_id,
                frames.len(),
                frames.f0.voiced_fraction()
            );
        }
        Ok(lines)
    });
    let (ok, errors) = partition(results, "analyze");
    let mut csv = String::from("session_id,channel,n_frames,voiced_fraction,median_f0_hz,mean_active_db\n");
    ok.iter().for_each(|(_, l)| csv.push_str(l));
    std::fs::write(dir.join("summary.csv"), run.hashed(&csv))?;
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}

pub fn events_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let dir = run.stage_dir("events")?;
    let results = run.per_session(&manifest.rows, |row| {
        let words = load_words(row)?;
        let audio = load_audio(row)?;
        session_events(&row.session_id, &words, &audio, &run.config)
    });
    let (ok, errors) = partition(results, "events");
    let ev: Vec<_> = ok.iter().map(|(id, s)| (id.clone(), s.events.clone())).collect();
    let mt: Vec<_> = ok.iter().map(|(id, s)| (id.clone(), s.midturn.clone())).collect();
    std::fs::write(dir.join("events.csv"), run.hashed(&events_csv(&ev)))?;
    std::fs::write(dir.join("midturn.csv"), run.hashed(&midturn_csv(&mt)))?;
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}

pub fn labels_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let dir = run.stage_dir("labels")?;
    let results = run.per_session(&manifest.rows, |row| {
        let words = load_words(row)?;
        let audio = load_audio(row)?;
        let ev = session_events(&row.session_id, &words, &audio, &run.config)?;
        let labels = future_activity_labels(&ev.vad);
        let path = dir.join(format!("{}.tcfl", row.session_id));
        let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        turncue::sidecar::write_labels(std::io::BufWriter::new(file), &labels)?;
        Ok((labels.n_frames(), labels.valid.iter().filter(|v| **v).count()))
    });
    let (ok, errors) = partition(results, "labels");
    let mut csv = String::from("session_id,n_frames,n_valid\n");
    for (id, (n, v)) in &ok {
        let _ = writeln!(csv, "{id},{n},{v}");
    }
    std::fs::write(dir.join("summary.csv"), run.hashed(&csv))?;
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}

/// Shared noise material for the background-noise conditions.
pub struct NoiseMaterial {
    /// Clean channels of every loadable session.
    pub pool: Vec<(String, Waveform)>,
    pub babble: Option<Vec<Waveform>>,
    pub music: Vec<Waveform>,
}

impl NoiseMaterial {
    pub fn load(run: &Run, manifest: &SessionManifest, cells: &[Cell]) -> Result<Self> {
        let cfg = &run.config;
        let needs = |name: &str| cells.iter().any(|c| c.condition == name);
        let needs_pool = needs("speech-noise") || (needs("babble") && cfg.babble_dir.is_none());
        let mut pool = Vec::new();
        if needs_pool {
            let loaded = run.per_session(&manifest.rows, load_audio);
            for (id, r) in loaded {
                match r {
                    Ok([a, b]) => {
                        pool.push((id.clone(), a));
                        pool.push((id, b));
                    }
                    Err(e) => log::warn!("session {id} unavailable as a noise source: {e:#}"),
                }
            }
        }
        let babble = match &cfg.babble_dir {
            Some(d) if needs("babble") => Some(load_wav_dir(d)?),
            _ => None,
        };
        let music = match &cfg.music_dir {
            Some(d) if needs("music") => load_wav_dir(d)?,
            _ => Vec::new(),
        };
        Ok(Self { pool, babble, music })
    }

    /// Babble sources for one session: the configured files, or every
    /// other session's channels.
    pub fn babble_for(&self, session_id: &str) -> Vec<Waveform> {
        match &self.babble {
            Some(b) => b.clone(),
            None => self
                .pool
                .iter()
                .filter(|(id, _)| id != session_id)
                .map(|(_, w)| w.clone())
                .collect(),
        }
    }
}

/// Apply one cell to a session's channels.
pub fn manipulate_cell(
    run: &Run,
    session_id: &str,
    audio: &[Waveform; 2],
    words: &[turncue::WordToken],
    cell: &Cell,
    material: &NoiseMaterial,
    babble: &[Waveform],
) -> Result<Vec<Waveform>> {
    let cfg = &run.config;
    let spec = cell.spec(cfg.seed)?;
    let mut ctx = NoiseContext::new(session_id, &cfg.vocoder);
    ctx.scope = cfg.scope;
    ctx.babble_sources = babble;
    ctx.babble_overlap = cfg.babble_overlap;
    ctx.speech_pool = &material.pool;
    ctx.music = &material.music;
    if cell.condition == "music" && material.music.is_empty() {
        bail!("the music condition needs music_dir with at least one WAV file");
    }
    Ok(apply_condition(audio, words, &spec, &ctx)?)
}

pub fn manipulate_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let dir = run.stage_dir("manipulate")?;
    let cells = run.config.cells();
    let material = NoiseMaterial::load(run, manifest, &cells)?;
    let results = run.per_session(&manifest.rows, |row| {
        let audio = load_audio(row)?;
        let words = load_words(row)?;
        let babble = if cells.iter().any(|c| c.condition == "babble") {
            material.babble_for(&row.session_id)
        } else {
            Vec::new()
        };
        let mut lines = String::new();
        let mut cell_errors = Vec::new();
        for cell in &cells {
            let tag = cell.tag();
            let out = manipulate_cell(run, &row.session_id, &audio, &words, cell, &material, &babble)
                .and_then(|chans| {
                    for (c, w) in chans.iter().enumerate() {
                        let name = format!("{}_ch{c}_{tag}.wav", row.session_id);
                        w.write_wav(dir.join(&name)).with_context(|| format!("writing {name}"))?;
                        let _ = writeln!(
                            lines,
                            "{},{},{},{c},{name},{:.3},{:.4}",
                            row.session_id,
                            cell.condition,
                            fmt_snr(cell.snr_db),
                            turncue::audio::amplitude_db(w.rms()),
                            w.peak()
                        );
                    }
                    Ok(())
                });
            if let Err(e) = out {
                cell_errors.push(SessionError {
                    session_id: row.session_id.clone(),
                    stage: format!("manipulate/{tag}"),
                    message: format!("{e:#}"),
                });
            }
        }
        Ok((lines, cell_errors))
    });
    let (ok, mut errors) = partition(results, "manipulate");
    let mut csv = String::from("session_id,condition,snr_db,channel,file,rms_db,peak\n");
    for (_, (lines, errs)) in ok {
        csv.push_str(&lines);
        errors.extend(errs);
    }
    std::fs::write(dir.join("summary.csv"), run.hashed(&csv))?;
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}

pub fn mix_plan_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let dir = run.stage_dir("mix-plan")?;
    let cfg = &run.config;
    let ids: Vec<String> = manifest
        .rows
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| r.session_id.clone())
        .collect();
    let name = cfg.mix_condition.trim_end_matches("@snr");
    let has_noise = ConditionSpec::takes_snr(name) || name == "noise-pi";
    let plan = plan_mixed_training(&ids, cfg.clean_fraction, name, has_noise, cfg.seed)
        .context("planning mixed training (needs split=train sessions)")?;
    std::fs::write(dir.join("plan.csv"), run.hashed(&plan.to_csv()))?;
    log::info!("{} of {} training sessions manipulated", plan.n_manipulated(), ids.len());
    Ok(Vec::new())
}

/// Scored items of every session for one cell.
#[derive(Debug, Clone)]
pub struct CellScores {
    pub cell: Cell,
    /// `(session_id, items, dropped)` in manifest order.
    pub sessions: Vec<(String, Vec<ScoredEvent>, usize)>,
}

fn class_name(c: turncue::eval::EventClass) -> &'static str {
    match c {
        turncue::eval::EventClass::Shift => "shift",
        turncue::eval::EventClass::Hold => "hold",
        turncue::eval::EventClass::MidTurn => "midturn",
    }
}

/// Score the streams in `stream_dir` at every session's events.
pub fn score_cells(run: &Run, manifest: &SessionManifest, cells: &[Cell], stream_dir: &Path) -> (Vec<CellScores>, Vec<SessionError>) {
    let cfg = &run.config;
    let results = run.per_session(&manifest.rows, |row| {
        let words = load_words(row)?;
        let audio = load_audio(row)?;
        let ev = session_events(&row.session_id, &words, &audio, cfg)?;
        Ok(cells
            .iter()
            .map(|cell| {
                load_stream(stream_dir, &cell.tag(), &row.session_id).map(|s| {
                    score_session(&row.session_id, &s, &ev.events, &ev.midturn, cfg.window_ms, cfg.anchor)
                })
            })
            .collect::<Vec<_>>())
    });
    let (ok, mut errors) = partition(results, "score");
    let mut out: Vec<CellScores> = cells
        .iter()
        .map(|c| CellScores {
            cell: c.clone(),
            sessions: Vec::new(),
        })
        .collect();
    for (id, per_cell) in ok {
        for (i, r) in per_cell.into_iter().enumerate() {
            match r {
                Ok((items, dropped)) => out[i].sessions.push((id.clone(), items, dropped)),
                Err(e) => errors.push(SessionError {
                    session_id: id.clone(),
                    stage: format!("score/{}", cells[i].tag()),
                    message: format!("{e:#}"),
                }),
            }
        }
    }
    (out, errors)
}

fn scored_csv(scores: &[CellScores]) -> String {
    let mut s = String::from("condition,snr_db,session_id,class,time_s,score\n");
    for cs in scores {
        for (_, items, _) in &cs.sessions {
            for e in items {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{:.3},{:.6}",
                    cs.cell.condition,
                    fmt_snr(cs.cell.snr_db),
                    e.session_id,
                    class_name(e.class),
                    e.time_s,
                    e.score
                );
            }
        }
    }
    s
}

fn dropped_csv(scores: &[CellScores]) -> String {
    let mut s = String::from("condition,snr_db,session_id,n_scored,n_dropped\n");
    for cs in scores {
        for (id, items, dropped) in &cs.sessions {
            let _ = writeln!(s, "{},{},{id},{},{dropped}", cs.cell.condition, fmt_snr(cs.cell.snr_db), items.len());
        }
    }
    s
}

fn require_stream_dir(run: &Run) -> Result<&Path> {
    run.config
        .stream_dir
        .as_deref()
        .context("stream_dir is not set; point it at <dir>/<condition tag>/<session>.csv streams")
}

pub fn score_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let stream_dir = require_stream_dir(run)?;
    let dir = run.stage_dir("score")?;
    let (scores, errors) = score_cells(run, manifest, &run.config.cells(), stream_dir);
    std::fs::write(dir.join("scored.csv"), run.hashed(&scored_csv(&scores)))?;
    std::fs::write(dir.join("dropped.csv"), run.hashed(&dropped_csv(&scores)))?;
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}

/// Both metric sets over every cell and fold.
pub fn build_reports(manifest: &SessionManifest, scores: &[CellScores]) -> Result<[EvalReport; 2]> {
    manifest.check_folds()?;
    let mut out = Vec::new();
    for ms in [MetricSet::SPred, MetricSet::SHPred] {
        let mut inputs = Vec::new();
        for cs in scores {
            for k in 0..N_FOLDS {
                let (val, test) = manifest.fold_partition(k);
                let gather = |ids: &[&str]| {
                    let mut items = Vec::new();
                    let mut dropped = 0;
                    for (id, scored, d) in &cs.sessions {
                        if ids.contains(&id.as_str()) {
                            items.extend(scored.iter().cloned());
                            dropped += d;
                        }
                    }
                    (items, dropped)
                };
                let (validation, dv) = gather(&val);
                let (test, dt) = gather(&test);
                inputs.push(FoldInput {
                    condition: cs.cell.condition.clone(),
                    snr_db: cs.cell.snr_db,
                    fold: k,
                    validation,
                    test,
                    dropped: dv + dt,
                });
            }
        }
        out.push(build_report(ms, &inputs).with_context(|| format!("building the {} report", ms.as_str()))?);
    }
    let sh = out.pop().expect("two reports");
    let s = out.pop().expect("two reports");
    Ok([s, sh])
}

fn ttests_csv(report: &EvalReport) -> Result<String> {
    let mut s = String::from("metric_set,condition,snr_db,baseline,kind,t,df,p,degenerate\n");
    let Some(first) = report.aggregates.first() else {
        return Ok(s);
    };
    let base = report
        .aggregates
        .iter()
        .find(|a| a.condition == "clean" && a.snr_db.is_none())
        .unwrap_or(first);
    let folds = |cond: &str, snr: Option<f64>| -> Vec<f64> {
        report
            .rows
            .iter()
            .filter(|r| r.condition == cond && r.snr_db.map(f64::to_bits) == snr.map(f64::to_bits))
            .map(|r| r.metrics.bal_acc)
            .collect()
    };
    let b = folds(&base.condition, base.snr_db);
    for a in &report.aggregates {
        if a.condition == base.condition && a.snr_db == base.snr_db {
            continue;
        }
        let t = fold_ttest(&folds(&a.condition, a.snr_db), &b)?;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.6},{:.3},{:.6e},{}",
            a.metric_set.as_str(),
            a.condition,
            fmt_snr(a.snr_db),
            base.condition,
            match t.kind {
                TTestKind::Paired => "paired",
                TTestKind::Welch => "welch",
            },
            t.t,
            t.df,
            t.p,
            t.degenerate
        );
    }
    Ok(s)
}

/// Write `report.csv`, `figure.csv` and `ttests.csv` into `dir`.
pub fn write_reports(run: &Run, dir: &Path, reports: &[EvalReport; 2]) -> Result<()> {
    let csvs: Vec<String> = reports.iter().map(|r| r.to_csv(&run.hash)).collect();
    std::fs::write(dir.join("report.csv"), merge_report_csvs(&csvs)?)?;
    let mut points = figure_from_report(&reports[0])?;
    points.extend(figure_from_report(&reports[1])?);
    std::fs::write(dir.join("figure.csv"), figure_csv(&points, &run.hash))?;
    let mut tt = ttests_csv(&reports[0])?;
    tt.push_str(ttests_csv(&reports[1])?.split_once('\n').map(|x| x.1).unwrap_or(""));
    std::fs::write(dir.join("ttests.csv"), run.hashed(&tt))?;
    Ok(())
}

pub fn report_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let stream_dir = require_stream_dir(run)?;
    let dir = run.stage_dir("report")?;
    let (scores, errors) = score_cells(run, manifest, &run.config.cells(), stream_dir);
    run.write_errors(&dir, &errors)?;
    let reports = build_reports(manifest, &scores)?;
    write_reports(run, &dir, &reports)?;
    Ok(errors)
}

/// Plain-text transcript tokens of one channel, in time order.
fn reference_tokens(words: &[turncue::WordToken], channel: u8) -> Vec<String> {
    let mut w: Vec<&turncue::WordToken> = words.iter().filter(|w| w.channel == channel).collect();
    w.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    w.into_iter().map(|w| w.text.clone()).collect()
}

pub fn wer_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let hyp_dir = run
        .config
        .hyp_dir
        .clone()
        .context("hyp_dir is not set; point it at <dir>/<condition tag>/<session>_ch<c>.txt transcripts")?;
    let dir = run.stage_dir("wer")?;
    let cells = run.config.cells();
    let results = run.per_session(&manifest.rows, |row| {
        let words = load_words(row)?;
        let mut obs = Vec::new();
        for cell in &cells {
            for c in 0..2u8 {
                let reference = reference_tokens(&words, c);
                if reference.is_empty() {
                    continue;
                }
                let path = hyp_dir.join(cell.tag()).join(format!("{}_ch{c}.txt", row.session_id));
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let hyp: Vec<&str> = text.split_whitespace().collect();
                let refs: Vec<&str> = reference.iter().map(String::as_str).collect();
                let counts = turncue::eval::edit_counts(
                    &turncue::eval::normalize_tokens(&refs),
                    &turncue::eval::normalize_tokens(&hyp),
                );
                let rate = wer(&refs, &hyp)?;
                obs.push((cell.clone(), c, refs.len(), counts.total(), rate));
            }
        }
        Ok(obs)
    });
    let (ok, errors) = partition(results, "wer");
    let mut csv = String::from("condition,snr_db,session_id,channel,n_ref,errors,wer,wer_clamped\n");
    let mut points = Vec::new();
    for (id, obs) in &ok {
        for (cell, c, n, e, rate) in obs {
            let _ = writeln!(
                csv,
                "{},{},{id},{c},{n},{e},{rate:.6},{:.6}",
                cell.condition,
                fmt_snr(cell.snr_db),
                rate.min(1.0)
            );
            points.push(WerObservation {
                series: cell.condition.clone(),
                snr_db: cell.snr_db,
                wer: *rate,
            });
        }
    }
    std::fs::write(dir.join("wer.csv"), run.hashed(&csv))?;
    if !points.is_empty() {
        std::fs::write(dir.join("figure.csv"), figure_csv(&figure_from_wer(&points)?, &run.hash))?;
    }
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}

/// Event features of one session, with the event kind and time.
type LabelledFeatures = Vec<(ProsodyFeatures, bool, f64)>;

pub fn features_header() -> String {
    let mut s = String::from("session_id,split,kind,time_s");
    for n in FEATURE_NAMES {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    s
}

pub fn feature_line(id: &str, split: Split, shift: bool, t: f64, f: &ProsodyFeatures) -> String {
    let mut s = format!(
        "{id},{split},{},{t:.3}",
        if shift { TurnKind::Shift.as_str() } else { TurnKind::Hold.as_str() }
    );
    for v in f.0 {
        let _ = write!(s, ",{v:.6}");
    }
    s.push('\n');
    s
}

/// Train the prosody classifier on a set of labelled feature vectors.
pub fn train_prosody(run: &Run, data: &[(ProsodyFeatures, bool)]) -> Result<LogisticModel> {
    let x: Vec<Vec<f64>> = data.iter().map(|(f, _)| f.0.to_vec()).collect();
    let y: Vec<bool> = data.iter().map(|(_, y)| *y).collect();
    let mut opts = run.config.train;
    opts.seed = run.config.seed;
    let (model, losses) = train_logistic(&x, &y, &FEATURE_NAMES, opts)?;
    log::info!(
        "prosody model trained on {} events; loss {:.4} -> {:.4}",
        x.len(),
        losses.first().copied().unwrap_or(f64::NAN),
        losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(model)
}

pub fn prosody_train_stage(run: &Run, manifest: &SessionManifest) -> Result<Vec<SessionError>> {
    let dir = run.stage_dir("prosody")?;
    let cfg = &run.config;
    let results = run.per_session(&manifest.rows, |row| {
        let words = load_words(row)?;
        let audio = load_audio(row)?;
        let ev = session_events(&row.session_id, &words, &audio, cfg)?;
        let frames = [analyze(&audio[0], &cfg.vocoder)?, analyze(&audio[1], &cfg.vocoder)?];
        let feats = event_features([&frames[0], &frames[1]], &ev.vad, &ev.events, cfg.prosody_window_s)?;
        let labelled: LabelledFeatures = feats
            .into_iter()
            .zip(&ev.events)
            .map(|((f, y), e)| (f, y, e.silence_start_s))
            .collect();
        Ok((row.split, labelled, frames, ev.vad))
    });
    let (ok, errors) = partition(results, "prosody-train");

    let mut csv = features_header();
    for (id, (split, feats, _, _)) in &ok {
        for (f, y, t) in feats {
            csv.push_str(&feature_line(id, *split, *y, *t, f));
        }
    }
    std::fs::write(dir.join("features.csv"), run.hashed(&csv))?;

    let train: Vec<(ProsodyFeatures, bool)> = ok
        .iter()
        .filter(|(_, (s, ..))| *s == Split::Train)
        .flat_map(|(_, (_, f, ..))| f.iter().map(|(x, y, _)| (*x, *y)))
        .collect();
    if train.is_empty() {
        run.write_errors(&dir, &errors)?;
        bail!("no training events: the manifest needs split=train sessions with shifts and holds");
    }
    let model = train_prosody(run, &train)?;
    std::fs::write(dir.join("model.txt"), model.to_text())?;

    let mut summary = String::from("split,n_events,bal_acc,f1_weighted\n");
    for split in [Split::Train, Split::Val, Split::Test] {
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for (_, (s, feats, ..)) in &ok {
            if *s == split {
                for (f, y, _) in feats {
                    pred.push(model.predict(&f.0)? >= 0.5);
                    truth.push(*y);
                }
            }
        }
        if let Ok(m) = classification_metrics(&pred, &truth) {
            let _ = writeln!(summary, "{split},{},{:.6},{:.6}", truth.len(), m.bal_acc, m.f1_weighted);
        }
    }
    std::fs::write(dir.join("summary.csv"), run.hashed(&summary))?;

    let streams = dir.join("streams").join("clean");
    std::fs::create_dir_all(&streams)?;
    let mut errors = errors;
    for (id, (_, _, frames, vad)) in &ok {
        let r = (|| -> Result<()> {
            let ex = [FeatureExtractor::new(&frames[0], vad, 0)?, FeatureExtractor::new(&frames[1], vad, 1)?];
            let s = prosody_stream(&model, [&ex[0], &ex[1]], vad, cfg.stream_rate_hz, cfg.prosody_window_s)?;
            std::fs::write(streams.join(format!("{id}.csv")), run.hashed(&s.to_csv()))?;
            Ok(())
        })();
        if let Err(e) = r {
            errors.push(SessionError {
                session_id: id.clone(),
                stage: "prosody-stream".into(),
                message: format!("{e:#}"),
            });
        }
    }
    run.write_errors(&dir, &errors)?;
    Ok(errors)
}
