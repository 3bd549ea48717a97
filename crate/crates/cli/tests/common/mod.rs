//! Synthetic pipeline inputs and a runner for the `routecast` binary.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use routecast_core::adapters::{emit, AdapterId};
use routecast_core::mgt::{enumerate_antichains, prune, pruning_points};
use routecast_core::route::{MoleculeToken, ReactionStep, Route, Topology};
use routecast_core::stock::StockSet;
use routecast_core::synthetic::random_route;

pub const EPOCH: &str = "1700000000";

pub fn routecast(dir: &Path, args: &[&str]) -> Output {
    routecast_env(dir, args, &[])
}

pub fn routecast_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_routecast"));
    cmd.current_dir(dir).args(args).env("SOURCE_DATE_EPOCH", EPOCH);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn describe(out: &Output) -> String {
    format!(
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

fn mapping_lines(routes: &[Route]) -> String {
    emit(AdapterId::MappingString, routes).expect("mapping-string has an emitter")
}

pub const STRATA: &str = r#"{
  "buckets": [
    {"min_len": 1, "max_len": 2, "topology": "any", "n_samples": 20},
    {"min_len": 3, "max_len": 4, "topology": "linear", "n_samples": 15},
    {"min_len": 3, "max_len": 4, "topology": "convergent", "n_samples": 10},
    {"min_len": 5, "max_len": 6, "topology": "any", "n_samples": 15}
  ]
}
"#;

/// Writes `pool.txt`, `stock.txt`, `strata.json`, `preds_a.txt` (ranked
/// lists), `preds_b.txt` (one route per target) and `timing.csv` into `dir`.
pub fn write_inputs(dir: &Path, seed: u64) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let pool: Vec<Route> = (0..240)
        .map(|i| {
            let len = rng.random_range(1..=6);
            let topo = if len >= 2 && rng.random_bool(0.5) { Topology::Convergent } else { Topology::Linear };
            random_route(&mut rng, len, topo, &format!("m{i}_"))
        })
        .collect();

    let mut stock: BTreeSet<String> = BTreeSet::new();
    for r in &pool {
        for n in r.nodes().iter().skip(1) {
            let p = if n.is_leaf() { 0.92 } else { 0.3 };
            if rng.random_bool(p) {
                stock.insert(n.token.as_str().to_string());
            }
        }
    }
    let stock_set = StockSet::identity("stock", stock.iter());

    let mut preds_a = Vec::new();
    let mut preds_b = Vec::new();
    let mut timing = String::from("target_id,wall_seconds\n");
    for r in &pool {
        let decoy = || {
            let t = r.target().clone();
            let step = ReactionStep::new(t.clone(), vec![MoleculeToken::new("CCO").unwrap()]).unwrap();
            Route::new(t, vec![step], Default::default()).unwrap()
        };
        let pts = pruning_points(r, &stock_set);
        let cuts = if pts.len() <= 8 { enumerate_antichains(&pts, r, 20).unwrap() } else { vec![] };
        if rng.random_bool(0.9) {
            for _ in 0..rng.random_range(1..=5) {
                let p = match rng.random_range(0..4) {
                    0 => r.clone(),
                    1 => cuts.choose(&mut rng).map_or_else(|| r.clone(), |c| prune(r, c).unwrap()),
                    _ => decoy(),
                };
                preds_a.push(p);
            }
            let _ = writeln!(timing, "{},{:.1}", r.target(), rng.random_range(1.0..60.0));
        }
        preds_b.push(if rng.random_bool(0.5) { r.clone() } else { decoy() });
    }

    std::fs::write(dir.join("pool.txt"), mapping_lines(&pool)).unwrap();
    std::fs::write(dir.join("preds_a.txt"), mapping_lines(&preds_a)).unwrap();
    std::fs::write(dir.join("preds_b.txt"), mapping_lines(&preds_b)).unwrap();
    let mut stock_text = String::from("# synthetic stock\n");
    for s in &stock {
        stock_text.push_str(s);
        stock_text.push('\n');
    }
    std::fs::write(dir.join("stock.txt"), stock_text).unwrap();
    std::fs::write(dir.join("strata.json"), STRATA).unwrap();
    std::fs::write(dir.join("timing.csv"), timing).unwrap();
}

/// The full command sequence over the inputs of [`write_inputs`].
pub const PIPELINE: &[&[&str]] = &[
    &["ingest", "--adapter", "mapping-string", "--in", "pool.txt", "--out", "work/pool.ijl", "--target-id", "token"],
    &["ingest", "--adapter", "mapping-string", "--in", "preds_a.txt", "--out", "work/preds_a.ijl", "--target-id", "token"],
    &["ingest", "--adapter", "mapping-string", "--in", "preds_b.txt", "--out", "work/preds_b.ijl", "--target-id", "token"],
    &[
        "stability", "--pool", "work/pool.ijl", "--strata", "strata.json", "--stock", "stock.txt",
        "--predictions", "work/preds_a.ijl", "--seed", "2024", "--out", "work/stability.json",
    ],
    &[
        "build-benchmark", "--pool", "work/pool.ijl", "--strata", "strata.json", "--stock", "stock.txt",
        "--seed", "11", "--id", "toy-60", "--out", "work/bench.json",
    ],
    &[
        "evaluate", "--benchmark", "work/bench.json", "--predictions", "work/preds_a.ijl", "--stock", "stock.txt",
        "--k", "1,3,10", "--seed", "7", "--resamples", "2000", "--model-id", "ranked",
        "--timing", "timing.csv", "--rate-usd-per-hour", "0.1785", "--out", "work/report_a.json",
    ],
    &[
        "evaluate", "--benchmark", "work/bench.json", "--predictions", "work/preds_b.ijl", "--stock", "stock.txt",
        "--k", "1,3,10", "--seed", "7", "--resamples", "2000", "--model-id", "single",
        "--seconds-per-target", "3", "--rate-usd-per-hour", "0.714", "--out", "work/report_b.json",
    ],
    &[
        "compare", "--a", "work/report_b.json", "--b", "work/report_a.json", "--metric", "top10", "--seed", "7",
        "--resamples", "2000", "--out", "work/compare.json",
    ],
    &[
        "report", "--reports", "work/report_a.json", "work/report_b.json", "--stability", "work/stability.json",
        "--out-dir", "work/tables",
    ],
];

/// Runs [`PIPELINE`] in `dir`, panicking with the command output on failure.
pub fn run_pipeline(dir: &Path, env: &[(&str, &str)]) {
    for args in PIPELINE {
        let out = routecast_env(dir, args, env);
        assert!(out.status.success(), "{:?} failed: {}", args, describe(&out));
    }
}

/// Every regular file under `dir`, root-relative, sorted.
pub fn files_under(dir: &Path) -> Vec<PathBuf> {
    fn walk(base: &Path, d: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
