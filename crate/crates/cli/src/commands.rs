use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use routecast_core::adapters::{convert, emit_interchange, AdapterId};
use routecast_core::benchmark::{
    build_benchmark, seed_stability, stratified_sample, target_id_of, BenchmarkDefinition, BenchmarkVerification,
    StabilityTable, StrataSpec, TARGET_ID_KEY,
};
use routecast_core::evaluation::{
    compare_reports, constraint_filter, evaluate_benchmark, first_match_rank, leaderboard, pareto_points, str_metric,
    structural_filter, BenchmarkReport, EvalConfig, GtMode, LeaderboardRow, MetricTable, ParetoPoint, PredictionSet,
    StockTermination, RANK_KEY,
};
use routecast_core::mgt::{expand_ground_truths_with_cap, DEFAULT_EXPANSION_CAP};
use routecast_core::provenance::{verify_all, verify_chain, VerifyReport};
use routecast_core::stats::rng::stream_seed;
use routecast_core::stats::PairedDiffResult;
use routecast_core::stock::{load_stock, StockSet};
use serde::{Deserialize, Serialize};

use crate::cli::*;
use crate::ctx::{self, Ctx};
use crate::error::{CliError, Result};

pub fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<()> {
    let routes = ctx::load_routes(&a.input, a.adapter)?;
    let mut next_rank: BTreeMap<String, usize> = BTreeMap::new();
    let routes: Vec<_> = routes
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            match a.target_id {
                TargetIdMode::Keep => {}
                TargetIdMode::Token => {
                    let token = r.target().as_str().to_string();
                    r = r.with_meta(TARGET_ID_KEY, token);
                }
                TargetIdMode::Index => r = r.with_meta(TARGET_ID_KEY, format!("t{i:06}")),
            }
            // Source order is the ranking; only fill ranks that are absent.
            let group = r.meta(TARGET_ID_KEY).unwrap_or(r.target().as_str()).to_string();
            let rank = next_rank.entry(group).or_insert(0);
            *rank += 1;
            if r.meta(RANK_KEY).is_none() {
                r = r.with_meta(RANK_KEY, rank.to_string());
            }
            r
        })
        .collect();
    ctx::write_bytes(&a.out, emit_interchange(&routes).as_bytes())?;
    eprintln!("ingested {} routes", routes.len());
    ctx.record("ingest", &[&a.input], &[&a.out])?;
    Ok(())
}

pub fn convert_cmd(ctx: &Ctx, a: &ConvertArgs) -> Result<()> {
    let bytes = ctx::read_bytes(&a.input)?;
    let out = convert(a.from, a.to, &bytes)?;
    ctx::write_bytes(&a.out, out.as_bytes())?;
    ctx.record("convert", &[&a.input], &[&a.out])?;
    Ok(())
}

fn pool_inputs<'a>(pool: &'a PoolArgs) -> Vec<&'a Path> {
    let mut v = vec![pool.pool.as_path()];
    v.extend(ctx::strata_path(&pool.strata));
    v
}

pub fn sample(ctx: &Ctx, a: &SampleArgs) -> Result<()> {
    let pool = ctx::load_routes(&a.pool.pool, AdapterId::Interchange)?;
    let spec = ctx::strata(&a.pool.strata)?;
    let samples = stratified_sample(&pool, &spec, a.seed)?;
    let routes: Vec<_> = samples
        .iter()
        .map(|s| {
            s.route
                .clone()
                .with_meta(TARGET_ID_KEY, target_id_of(s.route, s.pool_index))
                .with_meta("stratum", spec.buckets[s.bucket].label())
        })
        .collect();
    ctx::write_bytes(&a.out, emit_interchange(&routes).as_bytes())?;
    ctx.record("sample", &pool_inputs(&a.pool), &[&a.out])?;
    Ok(())
}

/// What `stability` writes and `report` collects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityFile {
    pub pool: String,
    pub strata: StrataSpec,
    pub base_seed: Option<u64>,
    pub table: StabilityTable,
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn stability(ctx: &Ctx, a: &StabilityArgs) -> Result<()> {
    let pool = ctx::load_routes(&a.pool.pool, AdapterId::Interchange)?;
    let spec = ctx::strata(&a.pool.strata)?;
    let stock = ctx::stock(&a.stock)?;
    let preds = load_predictions(&a.predictions, "reference")?;
    let seeds = match (&a.seeds, a.seed) {
        (Some(s), _) => s.clone(),
        (None, Some(base)) => (0..a.n_seeds as u64).map(|i| stream_seed(base, i)).collect(),
        (None, None) => unreachable!("clap requires one of --seed/--seeds"),
    };
    let cap = a.max_pruning_points.unwrap_or(DEFAULT_EXPANSION_CAP);

    // Score every eligible pool route once; a candidate's metrics are then
    // means over its members.
    let outcomes: Vec<Option<(bool, Option<usize>)>> = pool
        .par_iter()
        .enumerate()
        .map(|(i, route)| {
            if route.is_degenerate() || spec.bucket_of(&route.stats()).is_none() {
                return Ok(None);
            }
            let tid = target_id_of(route, i);
            let gts = expand_ground_truths_with_cap(route, &stock, cap)
                .map_err(|e| CliError::Invalid(format!("{tid}: {e}")))?;
            let raw = preds.by_target.get(&tid).cloned().unwrap_or_default();
            let structural = structural_filter(raw, route.target());
            let validated = constraint_filter(&structural, &[&StockTermination(&stock)]);
            Ok(Some((str_metric(&structural, &stock), first_match_rank(&validated, &gts))))
        })
        .collect::<Result<_>>()?;
    let table = seed_stability(&pool, &spec, &seeds, |_, samples| {
        let n = samples.len() as f64;
        let mut m = [0.0; 3];
        for s in samples {
            let (str_ok, rank) = outcomes[s.pool_index].expect("sampled routes were scored");
            m[0] += f64::from(u8::from(str_ok));
            m[1] += f64::from(u8::from(rank == Some(1)));
            m[2] += f64::from(u8::from(rank.is_some_and(|r| r <= 10)));
        }
        m.map(|x| x / n)
    })?;
    eprintln!("chosen seed {} (candidate {})", table.chosen_seed, table.chosen_index);
    let out = StabilityFile {
        pool: file_name(&a.pool.pool),
        strata: spec,
        base_seed: a.seed,
        table,
    };
    ctx::write_json(&a.out, &out)?;
    let mut inputs = pool_inputs(&a.pool);
    inputs.push(&a.stock.stock);
    inputs.push(&a.predictions);
    ctx.record("stability", &inputs, &[&a.out])?;
    Ok(())
}

pub fn build(ctx: &Ctx, a: &BuildArgs) -> Result<()> {
    let pool = ctx::load_routes(&a.pool.pool, AdapterId::Interchange)?;
    let spec = ctx::strata(&a.pool.strata)?;
    let stock = ctx::stock(&a.stock)?;
    let samples = stratified_sample(&pool, &spec, a.seed)?;
    let mut bench = build_benchmark(&samples, &spec, &stock, &a.id, a.seed, a.max_pruning_points)?;
    let mut inputs = pool_inputs(&a.pool);
    inputs.push(&a.stock.stock);
    bench.provenance = ctx.parent_of(&inputs)?;
    ctx::write_json(&a.out, &bench)?;
    let variants: usize = bench.targets.iter().map(|t| t.ground_truth.n_variants).sum();
    eprintln!("{} targets, {variants} pruned variants", bench.targets.len());
    ctx.record("build-benchmark", &inputs, &[&a.out])?;
    Ok(())
}

fn load_predictions(path: &Path, model_id: &str) -> Result<PredictionSet> {
    let text = ctx::read_text(path)?;
    PredictionSet::from_interchange(model_id, &text).map_err(|source| CliError::Predictions {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Deserialize)]
struct TimingRow {
    target_id: String,
    wall_seconds: f64,
}

fn load_timing(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<TimingRow>() {
        let row = row.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        if !(row.wall_seconds >= 0.0) {
            return Err(CliError::Invalid(format!(
                "{}: negative or missing wall_seconds for {}",
                path.display(),
                row.target_id
            )));
        }
        if out.insert(row.target_id.clone(), row.wall_seconds).is_some() {
            return Err(CliError::Invalid(format!("{}: duplicate target {}", path.display(), row.target_id)));
        }
    }
    Ok(out)
}

pub fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    for (flag, v) in [("--seconds-per-target", a.seconds_per_target), ("--rate-usd-per-hour", a.rate_usd_per_hour)] {
        if v.is_some_and(|v| !(v >= 0.0)) {
            return Err(CliError::Usage(format!("{flag} must be non-negative")));
        }
    }
    let bench: BenchmarkDefinition = ctx::read_json(&a.benchmark)?;
    let stock = ctx::stock(&a.stock)?;
    let model_id = a
        .model_id
        .clone()
        .unwrap_or_else(|| a.predictions.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned()));
    let preds = load_predictions(&a.predictions, &model_id)?;
    let timing = a.timing.as_deref().map(load_timing).transpose()?;
    let config = EvalConfig {
        model_id,
        gt_mode: match a.gt {
            GtArg::Mgt => GtMode::Mgt,
            GtArg::Sgt => GtMode::Sgt,
        },
        k_values: a.k.clone(),
        stats_seed: a.seed,
        resamples: a.resamples,
        rate_usd_per_hour: a.rate_usd_per_hour,
        seconds_per_target: a.seconds_per_target,
    };
    let report = evaluate_benchmark(&bench, &preds, &stock, &config, timing.as_ref())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for (m, ci) in &report.aggregates {
        let flag = if ci.reliable { "" } else { " (unreliable)" };
        eprintln!("{m}: {:.4} [{:.4}, {:.4}]{flag}", ci.mean, ci.lo, ci.hi);
    }
    ctx::write_json(&a.out, &report)?;
    let mut inputs: Vec<&Path> = vec![&a.benchmark, &a.predictions, &a.stock.stock];
    inputs.extend(a.timing.as_deref());
    ctx.record("evaluate", &inputs, &[&a.out])?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Comparison<'a> {
    benchmark_id: &'a str,
    model_a: &'a str,
    model_b: &'a str,
    metric: &'a str,
    result: PairedDiffResult,
}

pub fn compare(ctx: &Ctx, a: &CompareArgs) -> Result<()> {
    let ra: BenchmarkReport = ctx::read_json(&a.a)?;
    let rb: BenchmarkReport = ctx::read_json(&a.b)?;
    let result = compare_reports(&ra, &rb, &a.metric, a.resamples, a.seed)?;
    let out = Comparison {
        benchmark_id: &ra.benchmark_id,
        model_a: &ra.model_id,
        model_b: &rb.model_id,
        metric: &a.metric,
        result,
    };
    let bytes = ctx::to_json(&out);
    print!("{}", String::from_utf8_lossy(&bytes));
    if let Some(path) = &a.out {
        ctx::write_bytes(path, &bytes)?;
        ctx.record("compare", &[&a.a, &a.b], &[path])?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct StratifiedRow<'a> {
    benchmark_id: &'a str,
    model_id: &'a str,
    gt_mode: GtMode,
    by_length: &'a BTreeMap<usize, MetricTable>,
    by_topology: &'a BTreeMap<String, MetricTable>,
}

#[derive(Debug, Serialize)]
struct ParetoSet {
    benchmark_id: String,
    metric: String,
    points: Vec<ParetoPoint>,
}

#[derive(Debug, Serialize)]
struct Leaderboard<'a> {
    sort_metric: &'a str,
    rows: Vec<LeaderboardRow>,
}

pub fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| ctx::read_json::<BenchmarkReport>(p))
        .collect::<Result<Vec<_>>>()?;
    let stability = a
        .stability
        .iter()
        .map(|p| ctx::read_json::<StabilityFile>(p))
        .collect::<Result<Vec<_>>>()?;

    let board = Leaderboard {
        sort_metric: &a.metric,
        rows: leaderboard(&reports, &a.metric),
    };

    let mut order: Vec<&BenchmarkReport> = reports.iter().collect();
    order.sort_by(|x, y| (&x.benchmark_id, &x.model_id).cmp(&(&y.benchmark_id, &y.model_id)));
    let stratified: Vec<StratifiedRow> = order
        .iter()
        .map(|r| StratifiedRow {
            benchmark_id: &r.benchmark_id,
            model_id: &r.model_id,
            gt_mode: r.gt_mode,
            by_length: &r.stratified.by_length,
            by_topology: &r.stratified.by_topology,
        })
        .collect();

    // One point set per (benchmark, metric) over the reports that carry cost.
    let mut pareto = Vec::new();
    let benchmarks: BTreeSet<&str> = reports.iter().map(|r| r.benchmark_id.as_str()).collect();
    for b in benchmarks {
        let costed: Vec<&&BenchmarkReport> = order.iter().filter(|r| r.benchmark_id == b && r.cost.is_some()).collect();
        let metrics: BTreeSet<&String> = costed.iter().flat_map(|r| r.aggregates.keys()).collect();
        for m in metrics {
            let models: Vec<(String, f64, f64)> = costed
                .iter()
                .filter_map(|r| {
                    let ci = r.aggregates.get(m)?;
                    Some((r.model_id.clone(), ci.mean, r.cost?.total_usd))
                })
                .collect();
            pareto.push(ParetoSet {
                benchmark_id: b.to_string(),
                metric: m.clone(),
                points: pareto_points(m, &models),
            });
        }
    }

    let files: [(PathBuf, Vec<u8>); 4] = [
        (a.out_dir.join("leaderboard.json"), ctx::to_json(&board)),
        (a.out_dir.join("stratified.json"), ctx::to_json(&stratified)),
        (a.out_dir.join("pareto.json"), ctx::to_json(&pareto)),
        (a.out_dir.join("seed_stability.json"), ctx::to_json(&stability)),
    ];
    for (path, bytes) in &files {
        ctx::write_bytes(path, bytes)?;
    }
    let mut inputs: Vec<&Path> = a.reports.iter().map(PathBuf::as_path).collect();
    inputs.extend(a.stability.iter().map(PathBuf::as_path));
    let outputs: Vec<&Path> = files.iter().map(|(p, _)| p.as_path()).collect();
    ctx.record("report", &inputs, &outputs)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    ok: bool,
    chain: VerifyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    benchmark: Option<BenchmarkVerification>,
}

/// Read-only: writes no manifest.
pub fn verify(ctx: &Ctx, a: &VerifyArgs) -> Result<()> {
    let chain = match &a.manifest {
        Some(m) => verify_chain(&ctx.root, m)?,
        None => verify_all(&ctx.root)?,
    };
    if chain.manifests.is_empty() && chain.problems.is_empty() {
        eprintln!("warning: no manifests found under {}", ctx.root.join("provenance").display());
    }
    let benchmark = match (&a.benchmark, &a.stock) {
        (Some(b), Some(s)) => {
            let stock: StockSet = load_stock(s, &a.canonicalizer)?;
            let def: BenchmarkDefinition = ctx::read_json(b)?;
            Some(def.verify(&stock))
        }
        _ => None,
    };
    let ok = chain.is_ok() && benchmark.as_ref().is_none_or(BenchmarkVerification::is_ok);
    let out = VerifyOutput { ok, chain, benchmark };
    print!("{}", String::from_utf8_lossy(&ctx::to_json(&out)));
    if ok {
        eprintln!("verify: OK ({} manifests)", out.chain.manifests.len());
        Ok(())
    } else {
        Err(CliError::Invalid("verification failed".to_string()))
    }
}
