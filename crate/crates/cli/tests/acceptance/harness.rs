use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::Parser;
use tempfile::TempDir;
use turncue_cli::{run, Cli};

use crate::Check;

const SEED: &str = "11";
const CONDITIONS: &str = "clean,noise-pi";

struct Selftest {
    _tmp: TempDir,
    run_dir: PathBuf,
}

fn selftest() -> Selftest {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap().to_string();
    let cli = Cli::try_parse_from([
        "turncue", "--seed", SEED, "--conditions", CONDITIONS, "--workers", "1", "--out", &out, "selftest",
    ])
    .unwrap();
    let outcome = run(&cli).unwrap();
    assert_eq!(outcome.failed_sessions, 0, "selftest had failing sessions");
    Selftest {
        _tmp: tmp,
        run_dir: outcome.run_dir,
    }
}

/// The first selftest run, shared by the harness and determinism checks.
fn first_run() -> &'static Selftest {
    static RUN: OnceLock<Selftest> = OnceLock::new();
    RUN.get_or_init(selftest)
}

type Row = BTreeMap<String, String>;

fn read_report(path: &Path) -> Vec<Row> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().zip(r.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

fn num(row: &Row, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn fold_rows<'a>(rows: &'a [Row], condition: &str) -> Vec<&'a Row> {
    rows.iter().filter(|r| r["kind"] == "fold" && r["condition"] == condition).collect()
}

/// Copy the selftest's clean streams to nine babble SNR cells and run
/// `report` over them.
fn sweep_report(st: &Selftest) -> (Vec<Row>, BTreeSet<String>) {
    let tmp = tempfile::tempdir().unwrap();
    let streams = tmp.path().join("streams");
    let grid: Vec<f64> = (0..9).map(|i| -10.0 + 2.5 * i as f64).collect();
    let src = st.run_dir.join("selftest/streams/clean");
    for snr in &grid {
        let dst = streams.join(format!("babble_snr{snr}"));
        std::fs::create_dir_all(&dst).unwrap();
        for e in std::fs::read_dir(&src).unwrap() {
            let p = e.unwrap().path();
            std::fs::copy(&p, dst.join(p.file_name().unwrap())).unwrap();
        }
    }
    let config = tmp.path().join("sweep.conf");
    std::fs::write(&config, format!("stream_dir = {}\n", streams.display())).unwrap();
    let manifest = st.run_dir.join("selftest/corpus/manifest.csv");
    let out = tmp.path().join("out");
    let args: Vec<String> = [
        "turncue",
        "--manifest",
        manifest.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--seed",
        SEED,
        "--conditions",
        "babble",
        "--out",
        out.to_str().unwrap(),
        "report",
    ]
    .map(String::from)
    .to_vec();
    let outcome = run(&Cli::try_parse_from(args).unwrap()).unwrap();
    let rows = read_report(&outcome.run_dir.join("report/report.csv"));
    let expected = grid.iter().flat_map(|s| (0..5).map(move |f| format!("{s}/{f}"))).collect();
    (rows, expected)
}

pub fn end_to_end() -> Check {
    let st = first_run();
    let rows = read_report(&st.run_dir.join("selftest/report/report.csv"));
    let metric_cols = ["f1_weighted", "f1_hold", "f1_shift", "bal_acc"];
    let oracle = fold_rows(&rows, "stub-oracle");
    let oracle_min = oracle
        .iter()
        .flat_map(|r| metric_cols.iter().map(|c| num(r, c)))
        .fold(f64::INFINITY, f64::min);
    let constant = fold_rows(&rows, "stub-constant");
    let const_ok = constant.iter().all(|r| (num(r, "bal_acc") - 0.5).abs() <= 0.01);
    let const_range = constant
        .iter()
        .map(|r| num(r, "bal_acc"))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));

    let (sweep, expected) = sweep_report(st);
    let mut shape_ok = true;
    for set in ["S-Pred", "S/H-Pred"] {
        let folds: Vec<&Row> = sweep.iter().filter(|r| r["metric_set"] == set && r["kind"] == "fold").collect();
        let cells: BTreeSet<String> = folds.iter().map(|r| format!("{}/{}", num(r, "snr_db"), r["fold"])).collect();
        let aggregates = sweep.iter().filter(|r| r["metric_set"] == set && r["kind"] == "aggregate").count();
        shape_ok &= folds.len() == 45 && cells == expected && aggregates == 9;
    }

    Check::new(
        oracle.len() == 10 && oracle_min == 1.0 && constant.len() == 10 && const_ok && shape_ok,
        format!(
            "separable stub min metric {oracle_min:.3} over {} fold rows; constant stub bal acc {:.3}..{:.3} over {} fold rows; \
             9 SNR x 5 fold sweep shape {}",
            oracle.len(),
            const_range.0,
            const_range.1,
            constant.len(),
            if shape_ok { "ok" } else { "wrong" }
        ),
    )
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn determinism() -> Check {
    let a = tree(&first_run().run_dir);
    let second = selftest();
    let b = tree(&second.run_dir);
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    let bytes: usize = a.values().map(Vec::len).sum();
    Check::new(
        differing.is_empty() && !a.is_empty(),
        format!(
            "{} files ({bytes} bytes) per run, {} differ{}",
            a.len(),
            differing.len(),
            differing.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}
