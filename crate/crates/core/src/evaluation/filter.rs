//! The filtering protocol applied to one target's ranked predictions before
//! any metric is computed: structural validity first, then task constraints.
//! Each stage only accepts the previous stage's output type, so the order
//! cannot be swapped.

use serde::{Deserialize, Serialize};

use crate::mgt::GroundTruthSet;
use crate::route::{MoleculeToken, Route, RouteError};
use crate::stock::StockSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    /// The prediction is not a valid route.
    Invalid { error: String, message: String },
    TargetMismatch { found: String },
    Constraint { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based rank in the model's raw output.
    pub rank: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterTrace {
    pub n_raw: usize,
    pub n_structurally_valid: usize,
    pub n_constraint_valid: usize,
    pub rejected: Vec<Rejection>,
}

/// A surviving prediction with its original rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRoute {
    pub raw_rank: usize,
    pub route: Route,
}

/// Output of [`structural_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralPool {
    pub routes: Vec<RankedRoute>,
    pub trace: FilterTrace,
}

/// Output of [`constraint_filter`]: the fully validated, still ranked list.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPool {
    pub routes: Vec<RankedRoute>,
    pub trace: FilterTrace,
}

pub trait RouteConstraint: Sync {
    fn name(&self) -> &str;
    fn accepts(&self, route: &Route) -> bool;
}

/// All leaves purchasable.
pub struct StockTermination<'a>(pub &'a StockSet);

impl RouteConstraint for StockTermination<'_> {
    fn name(&self) -> &str {
        "stock_termination"
    }

    fn accepts(&self, route: &Route) -> bool {
        self.0.is_stock_terminated(route)
    }
}

/// Keeps valid routes rooted at `target`, in order.
pub fn structural_filter(raw: Vec<Result<Route, RouteError>>, target: &MoleculeToken) -> StructuralPool {
    let mut trace = FilterTrace {
        n_raw: raw.len(),
        ..FilterTrace::default()
    };
    let mut routes = Vec::new();
    for (i, item) in raw.into_iter().enumerate() {
        let rank = i + 1;
        match item {
            Err(e) => trace.rejected.push(Rejection {
                rank,
                reason: RejectReason::Invalid {
                    error: e.kind().to_string(),
                    message: e.to_string(),
                },
            }),
            Ok(route) if route.target() != target => trace.rejected.push(Rejection {
                rank,
                reason: RejectReason::TargetMismatch {
                    found: route.target().to_string(),
                },
            }),
            Ok(route) => routes.push(RankedRoute { raw_rank: rank, route }),
        }
    }
    trace.n_structurally_valid = routes.len();
    trace.n_constraint_valid = routes.len();
    StructuralPool { routes, trace }
}

/// Keeps routes passing every constraint, in order. A rejected route records
/// the first constraint it failed.
pub fn constraint_filter(pool: &StructuralPool, constraints: &[&dyn RouteConstraint]) -> ValidatedPool {
    let mut trace = pool.trace.clone();
    let mut routes = Vec::new();
    for r in &pool.routes {
        match constraints.iter().find(|c| !c.accepts(&r.route)) {
            Some(c) => trace.rejected.push(Rejection {
                rank: r.raw_rank,
                reason: RejectReason::Constraint {
                    name: c.name().to_string(),
                },
            }),
            None => routes.push(r.clone()),
        }
    }
    trace.rejected.sort_by_key(|r| r.rank);
    trace.n_constraint_valid = routes.len();
    ValidatedPool { routes, trace }
}

/// 1-based position in `pool` of the first route whose key is accepted.
pub fn first_match_rank(pool: &ValidatedPool, gts: &GroundTruthSet) -> Option<usize> {
    pool.routes
        .iter()
        .position(|r| gts.contains(&r.route.canonical_key()))
        .map(|p| p + 1)
}

/// Whether one of the first `k` validated routes matches, plus the first match
/// rank over the whole list.
pub fn topk_accuracy(pool: &ValidatedPool, gts: &GroundTruthSet, k: usize) -> (bool, Option<usize>) {
    assert!(k >= 1, "k must be at least 1");
    let rank = first_match_rank(pool, gts);
    (rank.is_some_and(|r| r <= k), rank)
}

/// Whether any structurally valid route is stock-terminated.
pub fn str_metric(pool: &StructuralPool, stock: &StockSet) -> bool {
    pool.routes.iter().any(|r| stock.is_stock_terminated(&r.route))
}
