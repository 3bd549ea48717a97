//! Canonical route model.
//!
//! A [`Route`] is a rooted tree: the target sits at the root, every
//! intermediate is produced by exactly one [`ReactionStep`] and consumed by
//! exactly one other step, and leaves are starting materials. Construction
//! validates all of this up front, so every `Route` value in the program is
//! structurally sound.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters used as delimiters by the string route grammars.
pub const RESERVED_CHARS: [char; 4] = ['>', '.', ';', '|'];

/// Structural problems found while building a route.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("invalid molecule token {token:?}: {reason}")]
    InvalidToken { token: String, reason: String },
    #[error("step producing {product} has no reactants")]
    EmptyReactants { product: MoleculeToken },
    #[error("{product} is produced by more than one step")]
    DuplicateProduct { product: MoleculeToken },
    #[error("step producing {product} is not consumed by any other step")]
    OrphanStep { product: MoleculeToken },
    #[error("intermediate {token} is consumed by more than one step")]
    SharedIntermediate { token: MoleculeToken },
    #[error("route contains a cycle through {token}")]
    Cycle { token: MoleculeToken },
    #[error("no step produces the target {target}")]
    MissingTargetStep { target: MoleculeToken },
}

impl RouteError {
    /// Short stable name of the error variant, used in filter traces.
    pub fn kind(&self) -> &'static str {
        match self {
            RouteError::InvalidToken { .. } => "InvalidToken",
            RouteError::EmptyReactants { .. } => "EmptyReactants",
            RouteError::DuplicateProduct { .. } => "DuplicateProduct",
            RouteError::OrphanStep { .. } => "OrphanStep",
            RouteError::SharedIntermediate { .. } => "SharedIntermediate",
            RouteError::Cycle { .. } => "Cycle",
            RouteError::MissingTargetStep { .. } => "MissingTargetStep",
        }
    }
}

/// An opaque molecule identifier (typically a canonical SMILES string).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MoleculeToken(String);

impl MoleculeToken {
    pub fn new(value: impl AsRef<str>) -> Result<Self, RouteError> {
        let raw = value.as_ref();
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(RouteError::InvalidToken {
                token: raw.to_string(),
                reason: "empty token".to_string(),
            });
        }
        if let Some(c) = trimmed
            .chars()
            .find(|c| c.is_whitespace() || RESERVED_CHARS.contains(c))
        {
            return Err(RouteError::InvalidToken {
                token: raw.to_string(),
                reason: format!("contains forbidden character {c:?}"),
            });
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MoleculeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for MoleculeToken {
    type Err = RouteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for MoleculeToken {
    type Error = RouteError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<MoleculeToken> for String {
    fn from(token: MoleculeToken) -> Self {
        token.0
    }
}

impl AsRef<str> for MoleculeToken {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// One reaction: `product` is made from `reactants`.
///
/// `metadata` carries per-reaction payload (template hashes and the like) and
/// never influences canonical keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionStep {
    pub product: MoleculeToken,
    pub reactants: Vec<MoleculeToken>,
    pub metadata: BTreeMap<String, String>,
}

impl ReactionStep {
    pub fn new(product: MoleculeToken, reactants: Vec<MoleculeToken>) -> Result<Self, RouteError> {
        let step = Self {
            product,
            reactants,
            metadata: BTreeMap::new(),
        };
        step.check()?;
        Ok(step)
    }

    /// Builds a step from raw strings, validating every token.
    pub fn parse(product: &str, reactants: &[&str]) -> Result<Self, RouteError> {
        let reactants = reactants
            .iter()
            .map(MoleculeToken::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(MoleculeToken::new(product)?, reactants)
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    fn check(&self) -> Result<(), RouteError> {
        if self.reactants.is_empty() {
            return Err(RouteError::EmptyReactants {
                product: self.product.clone(),
            });
        }
        if self.reactants.contains(&self.product) {
            return Err(RouteError::Cycle {
                token: self.product.clone(),
            });
        }
        Ok(())
    }
}

/// Position of a molecule occurrence inside a route tree (pre-order index,
/// root is 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

/// A molecule occurrence in the route tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub token: MoleculeToken,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Index into [`Route::steps`] of the step producing this node; `None` for leaves.
    pub step: Option<usize>,
    /// Number of reactions between the root and this node.
    pub depth: usize,
    /// Exclusive pre-order end of this node's subtree.
    subtree_end: usize,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.step.is_none()
    }
}

/// A validated retrosynthetic route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    target: MoleculeToken,
    steps: Vec<ReactionStep>,
    metadata: BTreeMap<String, String>,
    tree: Vec<TreeNode>,
}

impl Route {
    /// Validates `steps` as a tree rooted at `target`.
    ///
    /// Never returns a partially valid route: any violated invariant yields an
    /// error. `steps` may be empty, meaning the target itself is the only leaf.
    pub fn new(
        target: MoleculeToken,
        steps: Vec<ReactionStep>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, RouteError> {
        let tree = index_tree(&target, &steps)?;
        Ok(Self {
            target,
            steps,
            metadata,
            tree,
        })
    }

    /// The route consisting of the target alone.
    pub fn degenerate(target: MoleculeToken) -> Self {
        Self::new(target, Vec::new(), BTreeMap::new()).expect("zero-step route is always valid")
    }

    pub fn target(&self) -> &MoleculeToken {
        &self.target
    }

    pub fn steps(&self) -> &[ReactionStep] {
        &self.steps
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn into_parts(self) -> (MoleculeToken, Vec<ReactionStep>, BTreeMap<String, String>) {
        (self.target, self.steps, self.metadata)
    }

    pub fn is_degenerate(&self) -> bool {
        self.steps.is_empty()
    }

    /// Tree nodes in pre-order; index 0 is the root.
    pub fn nodes(&self) -> &[TreeNode] {
        &self.tree
    }

    pub fn node(&self, id: NodeId) -> Option<&TreeNode> {
        self.tree.get(id.0)
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    /// True iff `ancestor` lies strictly above `descendant`.
    pub fn is_ancestor(&self, ancestor: NodeId, descendant: NodeId) -> bool {
        match self.tree.get(ancestor.0) {
            Some(node) => descendant.0 > ancestor.0 && descendant.0 < node.subtree_end,
            None => false,
        }
    }

    /// Node ids of the subtree rooted at `id` (inclusive), in pre-order.
    pub fn subtree(&self, id: NodeId) -> impl Iterator<Item = NodeId> {
        let end = self.tree.get(id.0).map_or(id.0, |n| n.subtree_end);
        (id.0..end).map(NodeId)
    }

    /// Steps in tree pre-order (root step first, reactants left to right).
    pub fn preorder_steps(&self) -> impl Iterator<Item = &ReactionStep> {
        self.tree
            .iter()
            .filter_map(move |node| node.step.map(|i| &self.steps[i]))
    }

    /// Starting materials: reactants not produced by any step. For the
    /// zero-step route this is `{target}`.
    pub fn leaves(&self) -> BTreeSet<MoleculeToken> {
        self.tree
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.token.clone())
            .collect()
    }

    /// Canonical serialization of the route tree.
    pub fn canonical_key(&self) -> CanonicalRouteKey {
        CanonicalRouteKey(self.serialize_from(NodeId(0)))
    }

    /// Canonical serialization of the subtree rooted at `id`.
    pub fn subtree_key(&self, id: NodeId) -> Option<CanonicalRouteKey> {
        if id.0 >= self.tree.len() {
            return None;
        }
        Some(CanonicalRouteKey(self.serialize_from(id)))
    }

    fn serialize_from(&self, stop: NodeId) -> String {
        let mut keys = vec![String::new(); self.tree.len()];
        // Children always have larger pre-order indices than their parent.
        for i in (stop.0..self.tree.len()).rev() {
            let node = &self.tree[i];
            let mut key = escape_token(node.token.as_str());
            if !node.children.is_empty() {
                let mut parts: Vec<String> = node
                    .children
                    .iter()
                    .map(|c| std::mem::take(&mut keys[c.0]))
                    .collect();
                parts.sort_unstable();
                key.push('(');
                key.push_str(&parts.join(","));
                key.push(')');
            }
            keys[i] = key;
        }
        std::mem::take(&mut keys[stop.0])
    }

    pub fn stats(&self) -> RouteStats {
        let length = self.tree.iter().map(|n| n.depth).max().unwrap_or(0);
        let convergent = self.tree.iter().any(|n| {
            n.children
                .iter()
                .filter(|c| !self.tree[c.0].is_leaf())
                .count()
                >= 2
        });
        RouteStats {
            length,
            topology: if convergent {
                Topology::Convergent
            } else {
                Topology::Linear
            },
            n_steps: self.steps.len(),
            n_leaves: self.leaves().len(),
        }
    }
}

/// Functional alias matching the pipeline vocabulary.
pub fn build_route(
    target: MoleculeToken,
    steps: Vec<ReactionStep>,
    metadata: BTreeMap<String, String>,
) -> Result<Route, RouteError> {
    Route::new(target, steps, metadata)
}

pub fn canonical_key(route: &Route) -> CanonicalRouteKey {
    route.canonical_key()
}

pub fn route_stats(route: &Route) -> RouteStats {
    route.stats()
}

pub fn leaves(route: &Route) -> BTreeSet<MoleculeToken> {
    route.leaves()
}

fn escape_token(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        match c {
            '%' => out.push_str("%25"),
            '(' => out.push_str("%28"),
            ')' => out.push_str("%29"),
            ',' => out.push_str("%2C"),
            _ => out.push(c),
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    OnPath,
    Done,
}

fn index_tree(target: &MoleculeToken, steps: &[ReactionStep]) -> Result<Vec<TreeNode>, RouteError> {
    for step in steps {
        step.check()?;
    }

    let mut producer: HashMap<&MoleculeToken, usize> = HashMap::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        if producer.insert(&step.product, i).is_some() {
            return Err(RouteError::DuplicateProduct {
                product: step.product.clone(),
            });
        }
    }

    if steps.is_empty() {
        return Ok(vec![TreeNode {
            token: target.clone(),
            parent: None,
            children: Vec::new(),
            step: None,
            depth: 0,
            subtree_end: 1,
        }]);
    }
    if !producer.contains_key(target) {
        return Err(RouteError::MissingTargetStep {
            target: target.clone(),
        });
    }

    // Cycle search over the product -> intermediate-reactant graph.
    let mut marks: HashMap<&MoleculeToken, Mark> = HashMap::with_capacity(steps.len());
    let mut stack: Vec<(&MoleculeToken, usize)> = vec![(target, 0)];
    marks.insert(target, Mark::OnPath);
    while let Some(&(token, next)) = stack.last() {
        let step = &steps[producer[token]];
        if next < step.reactants.len() {
            stack.last_mut().expect("non-empty").1 += 1;
            let reactant = &step.reactants[next];
            if producer.contains_key(reactant) {
                match marks.get(reactant) {
                    Some(Mark::OnPath) => {
                        return Err(RouteError::Cycle {
                            token: reactant.clone(),
                        })
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(reactant, Mark::OnPath);
                        stack.push((reactant, 0));
                    }
                }
            }
        } else {
            marks.insert(token, Mark::Done);
            stack.pop();
        }
    }

    let mut consumers: HashMap<&MoleculeToken, usize> = HashMap::new();
    for step in steps {
        for reactant in &step.reactants {
            *consumers.entry(reactant).or_default() += 1;
        }
    }
    for step in steps {
        if &step.product == target {
            continue;
        }
        match consumers.get(&step.product).copied().unwrap_or(0) {
            0 => {
                return Err(RouteError::OrphanStep {
                    product: step.product.clone(),
                })
            }
            1 => {}
            _ => {
                return Err(RouteError::SharedIntermediate {
                    token: step.product.clone(),
                })
            }
        }
    }
    if consumers.contains_key(target) {
        return Err(RouteError::Cycle {
            token: target.clone(),
        });
    }
    // Every product has a single consumer, so anything unreachable from the
    // target closes a loop on itself.
    if let Some(step) = steps.iter().find(|s| !marks.contains_key(&s.product)) {
        return Err(RouteError::Cycle {
            token: step.product.clone(),
        });
    }

    let mut tree: Vec<TreeNode> = Vec::new();
    let mut pending: Vec<(&MoleculeToken, Option<NodeId>, usize)> = vec![(target, None, 0)];
    let mut seen: HashSet<usize> = HashSet::new();
    while let Some((token, parent, depth)) = pending.pop() {
        let id = NodeId(tree.len());
        let step = producer.get(token).copied();
        tree.push(TreeNode {
            token: token.clone(),
            parent,
            children: Vec::new(),
            step,
            depth,
            subtree_end: 0,
        });
        if let Some(p) = parent {
            tree[p.0].children.push(id);
        }
        if let Some(i) = step {
            seen.insert(i);
            for reactant in steps[i].reactants.iter().rev() {
                pending.push((reactant, Some(id), depth + 1));
            }
        }
    }
    debug_assert_eq!(seen.len(), steps.len());
    for i in (0..tree.len()).rev() {
        tree[i].subtree_end = match tree[i].children.last() {
            Some(last) => tree[last.0].subtree_end,
            None => i + 1,
        };
    }
    Ok(tree)
}

/// Deterministic, reactant-order-insensitive serialization of a route tree.
///
/// Grammar: a leaf is its escaped token; a produced molecule is
/// `token(child,child,...)` with children sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalRouteKey(String);

impl CanonicalRouteKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Wraps an already-serialized key, e.g. one read back from a benchmark file.
    pub fn from_raw(raw: impl Into<String>) -> Self {
        Self(raw.into())
    }
}

impl fmt::Display for CanonicalRouteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Linear,
    Convergent,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Linear => "linear",
            Topology::Convergent => "convergent",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape summary used for stratification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStats {
    /// Reactions along the longest root-to-leaf path.
    pub length: usize,
    pub topology: Topology,
    pub n_steps: usize,
    pub n_leaves: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str) -> MoleculeToken {
        MoleculeToken::new(s).unwrap()
    }

    fn step(product: &str, reactants: &[&str]) -> ReactionStep {
        ReactionStep::parse(product, reactants).unwrap()
    }

    fn route(target: &str, steps: Vec<ReactionStep>) -> Result<Route, RouteError> {
        Route::new(tok(target), steps, BTreeMap::new())
    }

    fn two_step() -> Route {
        route("T", vec![step("T", &["I", "L3"]), step("I", &["L1", "L2"])]).unwrap()
    }

    #[test]
    fn token_rules() {
        assert_eq!(tok("  CCO ").as_str(), "CCO");
        assert!(MoleculeToken::new("").is_err());
        assert!(MoleculeToken::new("   ").is_err());
        for bad in ["a b", "a>b", "a.b", "a;b", "a|b", "a\tb"] {
            assert!(MoleculeToken::new(bad).is_err(), "{bad}");
        }
        assert!(MoleculeToken::new("C(=O)O,x%").is_ok());
    }

    #[test]
    fn reference_route_is_valid() {
        let r = two_step();
        assert_eq!(r.steps().len(), 2);
        assert_eq!(r.nodes().len(), 5);
        assert_eq!(r.nodes()[0].token, tok("T"));
    }

    #[test]
    fn degenerate_route() {
        let r = route("T", vec![]).unwrap();
        assert!(r.is_degenerate());
        assert_eq!(r.leaves(), BTreeSet::from([tok("T")]));
        let s = r.stats();
        assert_eq!((s.length, s.topology, s.n_steps, s.n_leaves), (0, Topology::Linear, 0, 1));
        assert_eq!(r.canonical_key().as_str(), "T");
    }

    #[test]
    fn two_step_cycle_rejected() {
        let err = route("T", vec![step("T", &["I"]), step("I", &["T"])]).unwrap_err();
        assert_eq!(err.kind(), "Cycle");
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            ReactionStep::parse("T", &[]),
            Err(RouteError::EmptyReactants { .. })
        ));
        assert!(matches!(
            ReactionStep::parse("T", &["T"]),
            Err(RouteError::Cycle { .. })
        ));
        let dup = route("T", vec![step("T", &["I"]), step("I", &["A"]), step("I", &["B"])]);
        assert!(matches!(dup, Err(RouteError::DuplicateProduct { .. })));
        let orphan = route("T", vec![step("T", &["I"]), step("I", &["A"]), step("X", &["B"])]);
        assert!(matches!(orphan, Err(RouteError::OrphanStep { .. })));
        let missing = route("T", vec![step("I", &["A"])]);
        assert!(matches!(missing, Err(RouteError::MissingTargetStep { .. })));
        let shared = route("T", vec![step("T", &["I", "J"]), step("J", &["I"]), step("I", &["A"])]);
        assert!(matches!(shared, Err(RouteError::SharedIntermediate { .. })));
        // A loop disconnected from the target.
        let island = route(
            "T",
            vec![step("T", &["A"]), step("X", &["Y"]), step("Y", &["X"])],
        );
        assert!(matches!(island, Err(RouteError::Cycle { .. })));
        let deep = route(
            "A",
            vec![step("A", &["B"]), step("B", &["C"]), step("C", &["D", "B"])],
        );
        assert!(matches!(deep, Err(RouteError::Cycle { .. })));
    }

    #[test]
    fn canonical_key_grammar() {
        assert_eq!(two_step().canonical_key().as_str(), "T(I(L1,L2),L3)");
        let swapped = route("T", vec![step("I", &["L2", "L1"]), step("T", &["L3", "I"])]).unwrap();
        assert_eq!(swapped.canonical_key(), two_step().canonical_key());
        let short = route("T", vec![step("T", &["I", "L3"])]).unwrap();
        assert_ne!(short.canonical_key(), two_step().canonical_key());
    }

    #[test]
    fn canonical_key_escapes_structure_chars() {
        let a = route("T", vec![step("T", &["A(B)", "C,D"])]).unwrap();
        assert_eq!(a.canonical_key().as_str(), "T(A%28B%29,C%2CD)");
        let b = route("T", vec![step("T", &["A%28B%29", "C,D"])]).unwrap();
        assert_ne!(a.canonical_key(), b.canonical_key());
    }

    #[test]
    fn stats_examples() {
        let s = two_step().stats();
        assert_eq!((s.length, s.topology, s.n_steps, s.n_leaves), (2, Topology::Linear, 2, 3));
        let conv = route(
            "T",
            vec![step("T", &["I1", "I2"]), step("I1", &["L1"]), step("I2", &["L2"])],
        )
        .unwrap();
        let s = conv.stats();
        assert_eq!((s.length, s.topology), (2, Topology::Convergent));
    }

    #[test]
    fn leaves_examples() {
        assert_eq!(two_step().leaves(), BTreeSet::from([tok("L1"), tok("L2"), tok("L3")]));
        let short = route("T", vec![step("T", &["I", "L3"])]).unwrap();
        assert_eq!(short.leaves(), BTreeSet::from([tok("I"), tok("L3")]));
    }

    #[test]
    fn ancestry_and_preorder() {
        let r = two_step();
        let ids: Vec<&str> = r.nodes().iter().map(|n| n.token.as_str()).collect();
        assert_eq!(ids, ["T", "I", "L1", "L2", "L3"]);
        assert!(r.is_ancestor(NodeId(0), NodeId(2)));
        assert!(r.is_ancestor(NodeId(1), NodeId(3)));
        assert!(!r.is_ancestor(NodeId(1), NodeId(4)));
        assert!(!r.is_ancestor(NodeId(1), NodeId(1)));
        let order: Vec<&str> = r.preorder_steps().map(|s| s.product.as_str()).collect();
        assert_eq!(order, ["T", "I"]);
        assert_eq!(r.subtree_key(NodeId(1)).unwrap().as_str(), "I(L1,L2)");
    }

    #[test]
    fn repeated_leaves_allowed() {
        let r = route("T", vec![step("T", &["I", "L"]), step("I", &["L", "M"])]).unwrap();
        assert_eq!(r.nodes().len(), 5);
        assert_eq!(r.leaves().len(), 2);
    }

    #[test]
    fn long_chain_does_not_recurse() {
        let n = 3_000;
        let steps: Vec<ReactionStep> = (0..n)
            .map(|i| step(&format!("M{i}"), &[&format!("M{}", i + 1)]))
            .collect();
        let r = route("M0", steps).unwrap();
        assert_eq!(r.stats().length, n);
        assert!(r.canonical_key().as_str().starts_with("M0(M1("));
    }
}
