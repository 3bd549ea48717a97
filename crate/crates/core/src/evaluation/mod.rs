//! Per-target scoring of ranked model output against a benchmark, and the
//! bootstrap-backed report built from it.
//!
//! For each target the raw predictions pass [`structural_filter`], then
//! [`constraint_filter`] with stock termination. STR is read off the
//! structural pool; Top-K off the validated pool.

mod cost;
mod filter;
mod predictions;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{cost_summary, pareto_points, CostSummary, ParetoPoint};
pub use filter::{
    constraint_filter, first_match_rank, str_metric, structural_filter, topk_accuracy, FilterTrace, RankedRoute,
    RejectReason, Rejection, RouteConstraint, StockTermination, StructuralPool, ValidatedPool,
};
pub use predictions::{PredictionError, PredictionSet, RANK_KEY};

use crate::benchmark::BenchmarkDefinition;
use crate::mgt::GroundTruthSet;
use crate::route::RouteStats;
use crate::stats::{bootstrap_ci, paired_diff, rng::derive_seed, BootstrapCI, PairedDiffResult, StatsError};
use crate::stock::StockSet;

pub const STR_METRIC: &str = "str";

pub fn topk_metric(k: usize) -> String {
    format!("top{k}")
}

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("k values must be positive and non-empty, got {0:?}")]
    InvalidK(Vec<usize>),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("reports are not comparable: {0}")]
    Incomparable(String),
}

/// Which ground-truth keys count as a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GtMode {
    /// The reference and its embedded pruned variants.
    Mgt,
    /// The reference only.
    Sgt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub target_id: String,
    pub stock_terminated: bool,
    /// 1-based position of the first match among validated routes.
    pub first_match_rank: Option<usize>,
    /// Shape of the reference route.
    pub strata: RouteStats,
    pub wall_seconds: Option<f64>,
    pub filter_trace: FilterTrace,
}

impl TargetResult {
    pub fn outcome(&self, metric: &str) -> Option<bool> {
        if metric == STR_METRIC {
            return Some(self.stock_terminated);
        }
        let k: usize = metric.strip_prefix("top")?.parse().ok().filter(|&k| k >= 1)?;
        Some(self.first_match_rank.is_some_and(|r| r <= k))
    }
}

pub type MetricTable = BTreeMap<String, BootstrapCI>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stratified {
    pub by_length: BTreeMap<usize, MetricTable>,
    pub by_topology: BTreeMap<String, MetricTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark_id: String,
    pub model_id: String,
    pub gt_mode: GtMode,
    pub k_values: Vec<usize>,
    pub stats_seed: u64,
    pub resamples: usize,
    pub stock_content_hash: String,
    pub n_targets: usize,
    /// Benchmark targets with no predictions; scored as failures.
    pub missing_targets: Vec<String>,
    /// Prediction target ids absent from the benchmark; ignored.
    pub extra_targets: Vec<String>,
    pub warnings: Vec<String>,
    pub aggregates: MetricTable,
    pub stratified: Stratified,
    pub cost: Option<CostSummary>,
    pub per_target: Vec<TargetResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub model_id: String,
    pub gt_mode: GtMode,
    pub k_values: Vec<usize>,
    pub stats_seed: u64,
    pub resamples: usize,
    pub rate_usd_per_hour: Option<f64>,
    /// Overrides the mean of the timing records.
    pub seconds_per_target: Option<f64>,
}

fn metrics(k_values: &[usize]) -> Vec<String> {
    std::iter::once(STR_METRIC.to_string())
        .chain(k_values.iter().map(|&k| topk_metric(k)))
        .collect()
}

fn table(results: &[&TargetResult], metrics: &[String], seed: u64, stratum: &str, resamples: usize) -> Result<MetricTable, StatsError> {
    let mut out = MetricTable::new();
    if results.is_empty() {
        return Ok(out);
    }
    // Every metric in a stratum resamples the same target indices, so equal
    // outcome vectors give equal intervals and Top-K bounds rise with k.
    let stratum_seed = derive_seed(seed, stratum);
    for m in metrics {
        let values: Vec<f64> = results
            .iter()
            .map(|r| f64::from(u8::from(r.outcome(m).expect("known metric"))))
            .collect();
        let ci = bootstrap_ci(&values, resamples, stratum_seed)?;
        out.insert(m.clone(), ci);
    }
    Ok(out)
}

/// Overall and stratified intervals for STR and every Top-K. Each stratum
/// bootstraps from its own seed derived from `seed` and the stratum label.
pub fn aggregate(
    per_target: &[TargetResult],
    k_values: &[usize],
    seed: u64,
    resamples: usize,
) -> Result<(MetricTable, Stratified), StatsError> {
    let metrics = metrics(k_values);
    let all: Vec<&TargetResult> = per_target.iter().collect();
    let overall = table(&all, &metrics, seed, "all", resamples)?;

    let mut by_length: BTreeMap<usize, Vec<&TargetResult>> = BTreeMap::new();
    let mut by_topology: BTreeMap<String, Vec<&TargetResult>> = BTreeMap::new();
    for r in per_target {
        by_length.entry(r.strata.length).or_default().push(r);
        by_topology.entry(r.strata.topology.to_string()).or_default().push(r);
    }
    let mut stratified = Stratified::default();
    for (len, rs) in by_length {
        let t = table(&rs, &metrics, seed, &format!("length={len}"), resamples)?;
        stratified.by_length.insert(len, t);
    }
    for (topo, rs) in by_topology {
        let t = table(&rs, &metrics, seed, &format!("topology={topo}"), resamples)?;
        stratified.by_topology.insert(topo, t);
    }
    Ok((overall, stratified))
}

/// Recomputes `aggregates` and `stratified` from the per-target records.
pub fn recompute_aggregates(report: &BenchmarkReport) -> Result<(MetricTable, Stratified), StatsError> {
    aggregate(&report.per_target, &report.k_values, report.stats_seed, report.resamples)
}

pub fn evaluate_benchmark(
    bench: &BenchmarkDefinition,
    predictions: &PredictionSet,
    stock: &StockSet,
    config: &EvalConfig,
    timing: Option<&BTreeMap<String, f64>>,
) -> Result<BenchmarkReport, EvaluationError> {
    if config.k_values.is_empty() || config.k_values.contains(&0) {
        return Err(EvaluationError::InvalidK(config.k_values.clone()));
    }
    let mut k_values = config.k_values.clone();
    k_values.sort_unstable();
    k_values.dedup();

    let mut warnings = Vec::new();
    let stock_hash = stock.content_hash();
    if stock_hash != bench.stock.content_hash {
        warnings.push(format!(
            "stock content hash {stock_hash} differs from the benchmark's {}",
            bench.stock.content_hash
        ));
    }
    let bench_ids: BTreeSet<&str> = bench.targets.iter().map(|t| t.target_id.as_str()).collect();
    let missing_targets: Vec<String> = bench
        .targets
        .iter()
        .filter(|t| !predictions.by_target.contains_key(&t.target_id))
        .map(|t| t.target_id.clone())
        .collect();
    let extra_targets: Vec<String> = predictions
        .by_target
        .keys()
        .filter(|id| !bench_ids.contains(id.as_str()))
        .cloned()
        .collect();
    if !missing_targets.is_empty() || !extra_targets.is_empty() {
        warnings.push(format!(
            "prediction/benchmark mismatch: {} missing targets, {} extra targets",
            missing_targets.len(),
            extra_targets.len()
        ));
    }

    let per_target: Vec<TargetResult> = bench
        .targets
        .par_iter()
        .map(|t| {
            let raw = predictions.by_target.get(&t.target_id).cloned().unwrap_or_default();
            let structural = structural_filter(raw, &t.target);
            let stock_terminated = str_metric(&structural, stock);
            let validated = constraint_filter(&structural, &[&StockTermination(stock)]);
            let gts = match config.gt_mode {
                GtMode::Mgt => t.ground_truth.clone(),
                GtMode::Sgt => GroundTruthSet::from_keys(
                    t.target.clone(),
                    t.ground_truth.original_key.clone(),
                    BTreeSet::new(),
                ),
            };
            TargetResult {
                target_id: t.target_id.clone(),
                stock_terminated,
                first_match_rank: first_match_rank(&validated, &gts),
                strata: t.strata,
                wall_seconds: timing.and_then(|m| m.get(&t.target_id).copied()),
                filter_trace: validated.trace,
            }
        })
        .collect();

    let (aggregates, stratified) = aggregate(&per_target, &k_values, config.stats_seed, config.resamples)?;

    let timed: Vec<f64> = per_target.iter().filter_map(|r| r.wall_seconds).collect();
    let spt = config
        .seconds_per_target
        .or_else(|| (!timed.is_empty()).then(|| timed.iter().sum::<f64>() / timed.len() as f64));
    let cost = match (config.rate_usd_per_hour, spt) {
        (Some(rate), Some(spt)) => Some(cost_summary(per_target.len(), spt, rate)),
        (Some(_), None) => {
            warnings.push("a rate was given but no timing; cost omitted".to_string());
            None
        }
        _ => None,
    };

    Ok(BenchmarkReport {
        benchmark_id: bench.id.clone(),
        model_id: config.model_id.clone(),
        gt_mode: config.gt_mode,
        k_values,
        stats_seed: config.stats_seed,
        resamples: config.resamples,
        stock_content_hash: stock_hash,
        n_targets: per_target.len(),
        missing_targets,
        extra_targets,
        warnings,
        aggregates,
        stratified,
        cost,
        per_target,
    })
}

/// Paired bootstrap of `b` against `a` on one metric, aligned by target id.
pub fn compare_reports(
    a: &BenchmarkReport,
    b: &BenchmarkReport,
    metric: &str,
    resamples: usize,
    seed: u64,
) -> Result<PairedDiffResult, EvaluationError> {
    if a.benchmark_id != b.benchmark_id {
        return Err(EvaluationError::Incomparable(format!(
            "benchmarks {:?} and {:?}",
            a.benchmark_id, b.benchmark_id
        )));
    }
    let outcomes = |r: &BenchmarkReport| -> Result<BTreeMap<String, bool>, EvaluationError> {
        r.per_target
            .iter()
            .map(|t| {
                t.outcome(metric)
                    .map(|o| (t.target_id.clone(), o))
                    .ok_or_else(|| EvaluationError::UnknownMetric(metric.to_string()))
            })
            .collect()
    };
    let (oa, ob) = (outcomes(a)?, outcomes(b)?);
    if oa.len() != ob.len() || oa.keys().ne(ob.keys()) {
        return Err(EvaluationError::Incomparable("target sets differ".to_string()));
    }
    let va: Vec<bool> = oa.into_values().collect();
    let vb: Vec<bool> = ob.into_values().collect();
    Ok(paired_diff(&va, &vb, resamples, seed)?)
}

/// One leaderboard line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub benchmark_id: String,
    pub model_id: String,
    pub gt_mode: GtMode,
    pub n_targets: usize,
    pub metrics: MetricTable,
    pub total_usd: Option<f64>,
}

/// Rows sorted by the `sort_metric` mean, best first; ties by model id.
pub fn leaderboard(reports: &[BenchmarkReport], sort_metric: &str) -> Vec<LeaderboardRow> {
    let mut rows: Vec<LeaderboardRow> = reports
        .iter()
        .map(|r| LeaderboardRow {
            benchmark_id: r.benchmark_id.clone(),
            model_id: r.model_id.clone(),
            gt_mode: r.gt_mode,
            n_targets: r.n_targets,
            metrics: r.aggregates.clone(),
            total_usd: r.cost.map(|c| c.total_usd),
        })
        .collect();
    let mean = |r: &LeaderboardRow| r.metrics.get(sort_metric).map_or(f64::NEG_INFINITY, |c| c.mean);
    rows.sort_by(|a, b| {
        (&a.benchmark_id)
            .cmp(&b.benchmark_id)
            .then(mean(b).total_cmp(&mean(a)))
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    rows
}
