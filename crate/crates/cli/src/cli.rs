use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use routecast_core::adapters::AdapterId;

#[derive(Debug, Parser)]
#[command(name = "routecast", version, about = "Retrosynthesis route normalization and benchmark evaluation")]
pub struct Cli {
    /// Directory that manifests live under and that every recorded path must
    /// be inside.
    #[arg(long, global = true, default_value = ".")]
    pub root: PathBuf,

    /// Skip writing a provenance manifest for this run.
    #[arg(long, global = true)]
    pub no_manifest: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a native route file and write interchange records.
    Ingest(IngestArgs),
    /// Re-encode routes from one format to another.
    Convert(ConvertArgs),
    /// Draw a stratified sample from a route pool.
    Sample(SampleArgs),
    /// Score candidate samples for several seeds and pick the most typical one.
    Stability(StabilityArgs),
    /// Sample, expand ground truths and write a benchmark definition.
    BuildBenchmark(BuildArgs),
    /// Score a model's predictions against a benchmark.
    Evaluate(EvaluateArgs),
    /// Paired bootstrap test between two reports on one metric.
    Compare(CompareArgs),
    /// Leaderboard, stratified, Pareto and seed-stability tables.
    Report(ReportArgs),
    /// Re-hash everything the manifests reference.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetIdMode {
    /// Leave `target_id` metadata as found.
    Keep,
    /// Use the target token.
    Token,
    /// `t000000`, `t000001`, ... by route position.
    Index,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GtArg {
    Mgt,
    Sgt,
}

#[derive(Debug, Args)]
pub struct StockArgs {
    /// Newline-delimited stock file.
    #[arg(long)]
    pub stock: PathBuf,
    /// Canonicalizer applied to stock entries and queries.
    #[arg(long, default_value = "identity")]
    pub canonicalizer: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input format: nested-mol-json, mapping-string, alternating-json,
    /// edge-list-json, recipe-string or interchange.
    #[arg(long, value_parser = parse_adapter)]
    pub adapter: AdapterId,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// How to fill `target_id` metadata.
    #[arg(long, value_enum, default_value = "keep")]
    pub target_id: TargetIdMode,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_parser = parse_adapter)]
    pub from: AdapterId,
    /// Output format; needs an emitter (nested-mol-json, mapping-string,
    /// interchange).
    #[arg(long, value_parser = parse_adapter)]
    pub to: AdapterId,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    /// Interchange file of reference routes.
    #[arg(long)]
    pub pool: PathBuf,
    /// Preset name or path to a strata JSON file.
    #[arg(long)]
    pub strata: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub stock: StockArgs,
    /// Reference model predictions over the pool (interchange, with
    /// `target_id` and `rank`).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Base seed; candidate seeds are derived from it.
    #[arg(long, conflicts_with = "seeds", required_unless_present = "seeds")]
    pub seed: Option<u64>,
    /// Number of candidate seeds derived from `--seed`.
    #[arg(long, default_value_t = 15)]
    pub n_seeds: usize,
    /// Explicit comma-separated candidate seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Cap on in-stock intermediates per route before expansion fails.
    #[arg(long)]
    pub max_pruning_points: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub stock: StockArgs,
    #[arg(long)]
    pub seed: u64,
    /// Benchmark id recorded in the definition and every report.
    #[arg(long)]
    pub id: String,
    /// Cap on in-stock intermediates per route before expansion fails.
    #[arg(long)]
    pub max_pruning_points: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub stock: StockArgs,
    /// Comma-separated Top-K cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    pub k: Vec<usize>,
    /// Statistics seed.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = routecast_core::stats::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    /// Defaults to the predictions file stem.
    #[arg(long)]
    pub model_id: Option<String>,
    /// Ground truth: the expanded set, or the reference route alone.
    #[arg(long, value_enum, default_value = "mgt")]
    pub gt: GtArg,
    /// CSV with `target_id,wall_seconds` columns.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Overrides the mean of `--timing`.
    #[arg(long)]
    pub seconds_per_target: Option<f64>,
    /// Hardware rate for the cost summary.
    #[arg(long)]
    pub rate_usd_per_hour: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline report.
    #[arg(long)]
    pub a: PathBuf,
    /// Report tested against the baseline; differences are `b - a`.
    #[arg(long)]
    pub b: PathBuf,
    /// `str` or `top<k>`.
    #[arg(long, default_value = "top10")]
    pub metric: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = routecast_core::stats::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    /// Also write the result here; stdout always gets it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Outputs of `stability`.
    #[arg(long, num_args = 1..)]
    pub stability: Vec<PathBuf>,
    /// Leaderboard sort key.
    #[arg(long, default_value = "top10")]
    pub metric: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Walk every chain under `<root>/provenance/` (the default).
    #[arg(long, conflicts_with = "manifest")]
    pub all: bool,
    /// Walk only the chain ending at this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Also recompute a benchmark's embedded ground truths (needs `--stock`).
    #[arg(long, requires = "stock")]
    pub benchmark: Option<PathBuf>,
    #[arg(long)]
    pub stock: Option<PathBuf>,
    #[arg(long, default_value = "identity")]
    pub canonicalizer: String,
}

fn parse_adapter(s: &str) -> Result<AdapterId, String> {
    s.parse()
}
