//! Multi-ground-truth expansion.
//!
//! A reference route is widened into a set of acceptable answers: every
//! in-stock intermediate may serve as an alternative starting material, and
//! any antichain of such intermediates (no one an ancestor of another) can be
//! cut at once. Cut variants whose leaves are all purchasable join the set,
//! together with the unmodified reference.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::route::{CanonicalRouteKey, MoleculeToken, NodeId, Route, RouteError};
use crate::stock::StockSet;

/// Upper bound on pruning points per route before expansion refuses to run.
pub const DEFAULT_EXPANSION_CAP: usize = 20;

/// Metadata key recording which intermediates a pruned route was cut at.
pub const PRUNED_AT_KEY: &str = "pruned_at";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MgtError {
    #[error("route for {target} has {count} pruning points, more than the cap of {cap}")]
    TooManyPruningPoints {
        target: MoleculeToken,
        count: usize,
        cap: usize,
    },
    #[error("pruning points are not an antichain: {ancestor} is an ancestor of {descendant}")]
    NotAnAntichain {
        ancestor: MoleculeToken,
        descendant: MoleculeToken,
    },
    #[error("pruning point {token} at node {node} is not an intermediate of this route")]
    InvalidPoint { node: usize, token: MoleculeToken },
    #[error(transparent)]
    Route(#[from] RouteError),
}

/// An in-stock intermediate occurrence that may be cut.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PruningPoint {
    pub node: NodeId,
    pub token: MoleculeToken,
}

/// The accepted answers for one target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSet {
    pub target: MoleculeToken,
    pub original_key: CanonicalRouteKey,
    pub keys: BTreeSet<CanonicalRouteKey>,
    /// Number of keys besides the original.
    pub n_variants: usize,
}

impl GroundTruthSet {
    /// Only the reference itself is accepted.
    pub fn single(route: &Route) -> Self {
        let key = route.canonical_key();
        Self {
            target: route.target().clone(),
            original_key: key.clone(),
            keys: BTreeSet::from([key]),
            n_variants: 0,
        }
    }

    pub fn from_keys(target: MoleculeToken, original_key: CanonicalRouteKey, keys: BTreeSet<CanonicalRouteKey>) -> Self {
        let mut keys = keys;
        keys.insert(original_key.clone());
        let n_variants = keys.len() - 1;
        Self {
            target,
            original_key,
            keys,
            n_variants,
        }
    }

    pub fn contains(&self, key: &CanonicalRouteKey) -> bool {
        self.keys.contains(key)
    }
}

/// Intermediates (produced, non-root) whose token is in `stock`, in pre-order.
pub fn pruning_points(route: &Route, stock: &StockSet) -> Vec<PruningPoint> {
    route
        .nodes()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, n)| !n.is_leaf() && stock.contains(&n.token))
        .map(|(i, n)| PruningPoint {
            node: NodeId(i),
            token: n.token.clone(),
        })
        .collect()
}

fn first_comparable_pair<'a>(points: &[&'a PruningPoint], route: &Route) -> Option<(&'a PruningPoint, &'a PruningPoint)> {
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if route.is_ancestor(a.node, b.node) {
                return Some((a, b));
            }
            if route.is_ancestor(b.node, a.node) {
                return Some((b, a));
            }
        }
    }
    None
}

/// True iff no point is an ancestor of another.
pub fn is_antichain<'a, I>(points: I, route: &Route) -> bool
where
    I: IntoIterator<Item = &'a PruningPoint>,
{
    let points: Vec<&PruningPoint> = points.into_iter().collect();
    first_comparable_pair(&points, route).is_none()
}

/// All antichain subsets of `points`, including the empty set.
///
/// Subsets are ordered as bitmasks over `points` (point `i` is bit `i`),
/// ascending; each subset lists its points in input order.
pub fn enumerate_antichains(
    points: &[PruningPoint],
    route: &Route,
    cap: usize,
) -> Result<Vec<Vec<PruningPoint>>, MgtError> {
    // Subsets are tracked as u64 bitmasks.
    let cap = cap.min(63);
    if points.len() > cap {
        return Err(MgtError::TooManyPruningPoints {
            target: route.target().clone(),
            count: points.len(),
            cap,
        });
    }
    let n = points.len();
    let conflicts: Vec<u64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    route.is_ancestor(points[i].node, points[j].node)
                        || route.is_ancestor(points[j].node, points[i].node)
                })
                .fold(0u64, |mask, j| mask | (1 << j))
        })
        .collect();

    let mut masks = Vec::new();
    let mut stack: Vec<(usize, u64)> = vec![(0, 0)];
    while let Some((next, mask)) = stack.pop() {
        if next == n {
            masks.push(mask);
            continue;
        }
        stack.push((next + 1, mask));
        if conflicts[next] & mask == 0 {
            stack.push((next + 1, mask | (1 << next)));
        }
    }
    masks.sort_unstable();
    Ok(masks
        .into_iter()
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| points[i].clone())
                .collect()
        })
        .collect())
}

/// Turns every cut node into a leaf, dropping the step that produced it and
/// everything beneath it.
pub fn prune(route: &Route, cut: &[PruningPoint]) -> Result<Route, MgtError> {
    if cut.is_empty() {
        return Ok(route.clone());
    }
    for p in cut {
        match route.node(p.node) {
            Some(node) if p.node != route.root() && !node.is_leaf() && node.token == p.token => {}
            _ => {
                return Err(MgtError::InvalidPoint {
                    node: p.node.0,
                    token: p.token.clone(),
                })
            }
        }
    }
    let refs: Vec<&PruningPoint> = cut.iter().collect();
    if let Some((a, d)) = first_comparable_pair(&refs, route) {
        return Err(MgtError::NotAnAntichain {
            ancestor: a.token.clone(),
            descendant: d.token.clone(),
        });
    }

    let mut removed: HashSet<usize> = HashSet::new();
    for p in cut {
        for id in route.subtree(p.node) {
            if let Some(step) = route.nodes()[id.0].step {
                removed.insert(step);
            }
        }
    }
    let steps = route
        .steps()
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, s)| s.clone())
        .collect();

    let mut tokens: Vec<&str> = cut.iter().map(|p| p.token.as_str()).collect();
    tokens.sort_unstable();
    let mut metadata: BTreeMap<String, String> = route.metadata().clone();
    metadata.insert(PRUNED_AT_KEY.to_string(), tokens.join("."));
    Ok(Route::new(route.target().clone(), steps, metadata)?)
}

/// The reference plus every stock-terminated pruned variant, deduplicated by
/// canonical key.
///
/// The reference key is included even if the reference itself is not
/// stock-terminated.
pub fn expand_ground_truths(route: &Route, stock: &StockSet) -> Result<GroundTruthSet, MgtError> {
    expand_ground_truths_with_cap(route, stock, DEFAULT_EXPANSION_CAP)
}

pub fn expand_ground_truths_with_cap(
    route: &Route,
    stock: &StockSet,
    cap: usize,
) -> Result<GroundTruthSet, MgtError> {
    let points = pruning_points(route, stock);
    let antichains = enumerate_antichains(&points, route, cap)?;
    let original_key = route.canonical_key();
    let mut keys = BTreeSet::from([original_key.clone()]);
    for cut in antichains.iter().filter(|c| !c.is_empty()) {
        let pruned = prune(route, cut)?;
        if stock.is_stock_terminated(&pruned) {
            keys.insert(pruned.canonical_key());
        }
    }
    Ok(GroundTruthSet::from_keys(route.target().clone(), original_key, keys))
}
