//! Stratified benchmark construction, the multi-seed stability protocol and
//! self-verifying benchmark definition files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::RouteRecord;
use crate::mgt::{expand_ground_truths_with_cap, GroundTruthSet, MgtError, DEFAULT_EXPANSION_CAP};
use crate::route::{CanonicalRouteKey, MoleculeToken, Route, RouteStats, Topology};
use crate::stats::{deviation_score, rng::stream_rng, StatsError};
use crate::stock::StockSet;

pub const SCHEMA_VERSION: u32 = 1;

/// Metadata key holding a caller-assigned target id on pool routes.
pub const TARGET_ID_KEY: &str = "target_id";

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid strata spec: {0}")]
    InvalidSpec(String),
    #[error("bucket {bucket} needs {needed} routes but the pool has only {available}")]
    InsufficientPool {
        bucket: String,
        needed: usize,
        available: usize,
    },
    #[error("need at least 2 seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("target {target_id}: {source}")]
    Expansion {
        target_id: String,
        #[source]
        source: MgtError,
    },
    #[error("duplicate target id {0:?}")]
    DuplicateTargetId(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyFilter {
    Any,
    Linear,
    Convergent,
}

impl TopologyFilter {
    pub fn accepts(self, topology: Topology) -> bool {
        match self {
            TopologyFilter::Any => true,
            TopologyFilter::Linear => topology == Topology::Linear,
            TopologyFilter::Convergent => topology == Topology::Convergent,
        }
    }

    fn intersects(self, other: TopologyFilter) -> bool {
        self == TopologyFilter::Any || other == TopologyFilter::Any || self == other
    }

    fn as_str(self) -> &'static str {
        match self {
            TopologyFilter::Any => "any",
            TopologyFilter::Linear => "linear",
            TopologyFilter::Convergent => "convergent",
        }
    }
}

/// Routes of length `min_len..=max_len` whose topology passes `topology`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataBucket {
    pub min_len: usize,
    pub max_len: usize,
    pub topology: TopologyFilter,
    pub n_samples: usize,
}

impl StrataBucket {
    pub fn accepts(&self, stats: &RouteStats) -> bool {
        (self.min_len..=self.max_len).contains(&stats.length) && self.topology.accepts(stats.topology)
    }

    /// e.g. `len3-linear`, `len8-10-any`.
    pub fn label(&self) -> String {
        if self.min_len == self.max_len {
            format!("len{}-{}", self.min_len, self.topology.as_str())
        } else {
            format!("len{}-{}-{}", self.min_len, self.max_len, self.topology.as_str())
        }
    }

    fn overlaps(&self, other: &StrataBucket) -> bool {
        self.min_len <= other.max_len && other.min_len <= self.max_len && self.topology.intersects(other.topology)
    }
}

impl fmt::Display for StrataBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataSpec {
    pub buckets: Vec<StrataBucket>,
}

pub const PRESETS: [&str; 5] = ["mkt-lin-500", "mkt-cnv-160", "ref-lin-600", "ref-cnv-400", "ref-lng-84"];

fn per_length(lengths: std::ops::RangeInclusive<usize>, topology: TopologyFilter, n: usize) -> Vec<StrataBucket> {
    lengths
        .map(|len| StrataBucket {
            min_len: len,
            max_len: len,
            topology,
            n_samples: n,
        })
        .collect()
}

impl StrataSpec {
    pub fn new(buckets: Vec<StrataBucket>) -> Result<Self, BenchmarkError> {
        let spec = Self { buckets };
        spec.validate()?;
        Ok(spec)
    }

    /// Bucket layouts of the published benchmark sizes. Only the layout ships;
    /// the route pools they were drawn from do not.
    pub fn preset(name: &str) -> Result<Self, BenchmarkError> {
        let buckets = match name {
            "mkt-lin-500" => per_length(2..=6, TopologyFilter::Linear, 100),
            "mkt-cnv-160" => per_length(2..=5, TopologyFilter::Convergent, 40),
            "ref-lin-600" => per_length(2..=7, TopologyFilter::Linear, 100),
            "ref-cnv-400" => per_length(2..=5, TopologyFilter::Convergent, 100),
            "ref-lng-84" => vec![StrataBucket {
                min_len: 8,
                max_len: 10,
                topology: TopologyFilter::Any,
                n_samples: 84,
            }],
            other => return Err(BenchmarkError::UnknownPreset(other.to_string())),
        };
        Self::new(buckets)
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        if self.buckets.is_empty() {
            return Err(BenchmarkError::InvalidSpec("no buckets".into()));
        }
        for (i, b) in self.buckets.iter().enumerate() {
            if b.n_samples == 0 {
                return Err(BenchmarkError::InvalidSpec(format!("bucket {b} has n_samples = 0")));
            }
            if b.min_len > b.max_len {
                return Err(BenchmarkError::InvalidSpec(format!(
                    "bucket {i} has min_len {} > max_len {}",
                    b.min_len, b.max_len
                )));
            }
            if b.min_len == 0 {
                return Err(BenchmarkError::InvalidSpec(format!(
                    "bucket {b} admits zero-step routes"
                )));
            }
            if let Some(o) = self.buckets[..i].iter().find(|o| o.overlaps(b)) {
                return Err(BenchmarkError::InvalidSpec(format!("buckets {o} and {b} overlap")));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.n_samples).sum()
    }

    /// Index of the bucket accepting a route with these stats.
    pub fn bucket_of(&self, stats: &RouteStats) -> Option<usize> {
        self.buckets.iter().position(|b| b.accepts(stats))
    }
}

/// One route chosen by [`stratified_sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampled<'a> {
    pub pool_index: usize,
    pub bucket: usize,
    pub route: &'a Route,
}

/// Draws `n_samples` routes without replacement from each bucket's sub-pool.
///
/// Bucket `b` draws from stream `(seed, b)` over the ascending pool indices of
/// its candidates. Output is ordered by bucket, then pool index.
pub fn stratified_sample<'a>(pool: &'a [Route], spec: &StrataSpec, seed: u64) -> Result<Vec<Sampled<'a>>, BenchmarkError> {
    spec.validate()?;
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); spec.buckets.len()];
    for (i, route) in pool.iter().enumerate() {
        if route.is_degenerate() {
            continue;
        }
        if let Some(b) = spec.bucket_of(&route.stats()) {
            candidates[b].push(i);
        }
    }
    let mut out = Vec::with_capacity(spec.total());
    for (b, (bucket, mut idx)) in spec.buckets.iter().zip(candidates).enumerate() {
        if idx.len() < bucket.n_samples {
            return Err(BenchmarkError::InsufficientPool {
                bucket: bucket.label(),
                needed: bucket.n_samples,
                available: idx.len(),
            });
        }
        let mut rng = stream_rng(seed, b as u64);
        let (chosen, _) = idx.partial_shuffle(&mut rng, bucket.n_samples);
        chosen.sort_unstable();
        out.extend(chosen.iter().map(|&i| Sampled {
            pool_index: i,
            bucket: b,
            route: &pool[i],
        }));
    }
    Ok(out)
}

/// Id of a pool route: its `target_id` metadata, else one derived from the
/// pool index.
pub fn target_id_of(route: &Route, pool_index: usize) -> String {
    route
        .meta(TARGET_ID_KEY)
        .map(str::to_string)
        .unwrap_or_else(|| format!("t{pool_index:06}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub seed: u64,
    pub str: f64,
    pub top1: f64,
    pub top10: f64,
    pub deviation: f64,
}

/// Per-seed metrics and the selected seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    pub chosen_seed: u64,
    pub chosen_index: usize,
}

/// Builds one candidate per seed, scores each with `score` (returning STR,
/// Top-1, Top-10) and picks the candidate closest to the across-seed means.
pub fn seed_stability<F>(pool: &[Route], spec: &StrataSpec, seeds: &[u64], score: F) -> Result<StabilityTable, BenchmarkError>
where
    F: Fn(u64, &[Sampled<'_>]) -> [f64; 3] + Sync,
{
    if seeds.len() < 2 {
        return Err(BenchmarkError::TooFewSeeds(seeds.len()));
    }
    let metrics = seeds
        .par_iter()
        .map(|&seed| stratified_sample(pool, spec, seed).map(|s| score(seed, &s)))
        .collect::<Result<Vec<[f64; 3]>, _>>()?;
    let matrix: Vec<Vec<f64>> = metrics.iter().map(|m| m.to_vec()).collect();
    let dev = deviation_score(&matrix)?;
    let rows = seeds
        .iter()
        .zip(&metrics)
        .zip(&dev.scores)
        .map(|((&seed, m), &d)| StabilityRow {
            seed,
            str: m[0],
            top1: m[1],
            top10: m[2],
            deviation: d,
        })
        .collect();
    Ok(StabilityTable {
        rows,
        chosen_seed: seeds[dev.best],
        chosen_index: dev.best,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StockRef {
    pub name: String,
    pub canonicalizer: String,
    pub size: usize,
    pub content_hash: String,
}

impl StockRef {
    pub fn of(stock: &StockSet) -> Self {
        Self {
            name: stock.name().to_string(),
            canonicalizer: stock.canonicalizer_id().to_string(),
            size: stock.len(),
            content_hash: stock.content_hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkTarget {
    pub target_id: String,
    pub target: MoleculeToken,
    pub reference: RouteRecord,
    /// Label of the bucket the reference was drawn from.
    pub stratum: String,
    pub strata: RouteStats,
    pub ground_truth: GroundTruthSet,
}

/// A self-contained, verifiable benchmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkDefinition {
    pub schema_version: u32,
    pub id: String,
    pub seed: u64,
    pub strata: StrataSpec,
    pub stock: StockRef,
    pub expansion_cap: usize,
    /// Hash of the manifest that produced the route pool, when known.
    pub provenance: Option<String>,
    pub targets: Vec<BenchmarkTarget>,
}

/// Expands ground truths for every sampled route and assembles the definition.
pub fn build_benchmark(
    samples: &[Sampled<'_>],
    spec: &StrataSpec,
    stock: &StockSet,
    id: &str,
    seed: u64,
    cap: Option<usize>,
) -> Result<BenchmarkDefinition, BenchmarkError> {
    let cap = cap.unwrap_or(DEFAULT_EXPANSION_CAP);
    let mut seen = BTreeSet::new();
    for s in samples {
        let tid = target_id_of(s.route, s.pool_index);
        if !seen.insert(tid.clone()) {
            return Err(BenchmarkError::DuplicateTargetId(tid));
        }
    }
    let targets = samples
        .par_iter()
        .map(|s| {
            let target_id = target_id_of(s.route, s.pool_index);
            let ground_truth = expand_ground_truths_with_cap(s.route, stock, cap).map_err(|source| {
                BenchmarkError::Expansion {
                    target_id: target_id.clone(),
                    source,
                }
            })?;
            Ok(BenchmarkTarget {
                target_id,
                target: s.route.target().clone(),
                reference: RouteRecord::from_route(s.route),
                stratum: spec.buckets[s.bucket].label(),
                strata: s.route.stats(),
                ground_truth,
            })
        })
        .collect::<Result<Vec<_>, BenchmarkError>>()?;
    Ok(BenchmarkDefinition {
        schema_version: SCHEMA_VERSION,
        id: id.to_string(),
        seed,
        strata: spec.clone(),
        stock: StockRef::of(stock),
        expansion_cap: cap,
        provenance: None,
        targets,
    })
}

/// Problems found by [`BenchmarkDefinition::verify`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BenchmarkVerification {
    pub issues: Vec<String>,
}

impl BenchmarkVerification {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl BenchmarkDefinition {
    /// Recomputes everything derivable from the references and `stock` and
    /// compares it with what the file claims.
    pub fn verify(&self, stock: &StockSet) -> BenchmarkVerification {
        let mut issues = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            issues.push(format!("unsupported schema_version {}", self.schema_version));
        }
        let hash = stock.content_hash();
        if hash != self.stock.content_hash {
            issues.push(format!(
                "stock content hash {hash} does not match recorded {}",
                self.stock.content_hash
            ));
        }
        if let Err(e) = self.strata.validate() {
            issues.push(e.to_string());
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for t in &self.targets {
            if !ids.insert(t.target_id.as_str()) {
                issues.push(format!("duplicate target id {:?}", t.target_id));
            }
            *counts.entry(t.stratum.as_str()).or_default() += 1;
            issues.extend(self.verify_target(t, stock).into_iter().map(|m| format!("{}: {m}", t.target_id)));
        }
        for b in &self.strata.buckets {
            let label = b.label();
            let got = counts.remove(label.as_str()).unwrap_or(0);
            if got != b.n_samples {
                issues.push(format!("stratum {label} has {got} targets, strata require {}", b.n_samples));
            }
        }
        for (label, n) in counts {
            issues.push(format!("{n} targets in stratum {label} not in the strata"));
        }
        BenchmarkVerification { issues }
    }

    fn verify_target(&self, t: &BenchmarkTarget, stock: &StockSet) -> Vec<String> {
        let route = match t.reference.to_route() {
            Ok(r) => r,
            Err(e) => return vec![format!("reference route is invalid: {e}")],
        };
        let mut issues = Vec::new();
        if route.target() != &t.target {
            issues.push(format!("reference target {} differs from {}", route.target(), t.target));
        }
        let stats = route.stats();
        if stats != t.strata {
            issues.push("recorded strata differ from the reference route".to_string());
        }
        match self.strata.bucket_of(&stats) {
            Some(b) if self.strata.buckets[b].label() == t.stratum => {}
            _ => issues.push(format!("reference does not belong to stratum {}", t.stratum)),
        }
        match expand_ground_truths_with_cap(&route, stock, self.expansion_cap) {
            Ok(fresh) if fresh == t.ground_truth => {}
            Ok(fresh) => {
                let extra: Vec<&CanonicalRouteKey> = t.ground_truth.keys.difference(&fresh.keys).collect();
                let missing: Vec<&CanonicalRouteKey> = fresh.keys.difference(&t.ground_truth.keys).collect();
                issues.push(format!(
                    "embedded ground truths differ from recomputation (unexpected {extra:?}, missing {missing:?}, n_variants {} vs {})",
                    t.ground_truth.n_variants, fresh.n_variants
                ));
            }
            Err(e) => issues.push(format!("expansion failed: {e}")),
        }
        issues
    }
}
