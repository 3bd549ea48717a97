//! Purchasable-molecule stocks and leaf coverage.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::route::{MoleculeToken, Route};

#[derive(Debug, Error)]
pub enum StockError {
    #[error("reading stock {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown canonicalizer {0:?} (expected \"identity\" or \"fold-ws\")")]
    UnknownCanonicalizer(String),
}

/// Text-to-text normalization applied to both stock entries and queries.
///
/// Real chemical canonicalization (e.g. canonical SMILES from a toolkit) plugs
/// in here; the shipped implementations only normalize whitespace.
pub trait Canonicalizer: Send + Sync {
    fn id(&self) -> &str;
    fn canonicalize(&self, raw: &str) -> String;
}

/// Trims surrounding whitespace; otherwise exact, case-sensitive.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Canonicalizer for Identity {
    fn id(&self) -> &str {
        "identity"
    }

    fn canonicalize(&self, raw: &str) -> String {
        raw.trim().to_string()
    }
}

/// Trims and collapses internal whitespace runs to a single space.
#[derive(Debug, Clone, Copy, Default)]
pub struct FoldWhitespace;

impl Canonicalizer for FoldWhitespace {
    fn id(&self) -> &str {
        "fold-ws"
    }

    fn canonicalize(&self, raw: &str) -> String {
        raw.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

pub fn canonicalizer_by_id(id: &str) -> Result<Arc<dyn Canonicalizer>, StockError> {
    match id {
        "identity" => Ok(Arc::new(Identity)),
        "fold-ws" => Ok(Arc::new(FoldWhitespace)),
        other => Err(StockError::UnknownCanonicalizer(other.to_string())),
    }
}

/// An immutable set of purchasable molecules.
#[derive(Clone)]
pub struct StockSet {
    name: String,
    members: HashSet<String>,
    canonicalizer: Arc<dyn Canonicalizer>,
    original_count: usize,
    warnings: Vec<String>,
}

impl fmt::Debug for StockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StockSet")
            .field("name", &self.name)
            .field("members", &self.members.len())
            .field("canonicalizer", &self.canonicalizer.id())
            .finish()
    }
}

impl StockSet {
    pub fn from_tokens<I, S>(name: impl Into<String>, tokens: I, canonicalizer: Arc<dyn Canonicalizer>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut members = HashSet::new();
        let mut original_count = 0;
        let mut duplicates = 0;
        for raw in tokens {
            let canon = canonicalizer.canonicalize(raw.as_ref());
            if canon.is_empty() {
                continue;
            }
            original_count += 1;
            if !members.insert(canon) {
                duplicates += 1;
            }
        }
        let mut warnings = Vec::new();
        if duplicates > 0 {
            warnings.push(format!("{duplicates} duplicate entries collapsed after canonicalization"));
        }
        if members.is_empty() {
            warnings.push("stock is empty".to_string());
        }
        Self {
            name: name.into(),
            members,
            canonicalizer,
            original_count,
            warnings,
        }
    }

    /// Convenience constructor with the identity canonicalizer.
    pub fn identity<I, S>(name: impl Into<String>, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::from_tokens(name, tokens, Arc::new(Identity))
    }

    /// Parses newline-delimited stock text; blank lines and `#` comments are skipped.
    pub fn parse(name: impl Into<String>, text: &str, canonicalizer: Arc<dyn Canonicalizer>) -> Self {
        let tokens = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'));
        Self::from_tokens(name, tokens, canonicalizer)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn canonicalizer_id(&self) -> &str {
        self.canonicalizer.id()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Entries read before deduplication.
    pub fn original_count(&self) -> usize {
        self.original_count
    }

    /// Non-fatal load diagnostics (duplicates, empty stock).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn contains(&self, token: &MoleculeToken) -> bool {
        self.contains_str(token.as_str())
    }

    pub fn contains_str(&self, raw: &str) -> bool {
        self.members.contains(&self.canonicalizer.canonicalize(raw))
    }

    /// SHA-256 over the sorted canonical members joined by `\n`.
    ///
    /// Independent of file ordering, comments and duplicates.
    pub fn content_hash(&self) -> String {
        let sorted: BTreeSet<&str> = self.members.iter().map(String::as_str).collect();
        let mut hasher = Sha256::new();
        for (i, m) in sorted.iter().enumerate() {
            if i > 0 {
                hasher.update(b"\n");
            }
            hasher.update(m.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn is_stock_terminated(&self, route: &Route) -> bool {
        route.nodes().iter().filter(|n| n.is_leaf()).all(|n| self.contains(&n.token))
    }
}

pub fn load_stock(path: impl AsRef<Path>, canonicalizer_id: &str) -> Result<StockSet, StockError> {
    let path = path.as_ref();
    let canonicalizer = canonicalizer_by_id(canonicalizer_id)?;
    let text = std::fs::read_to_string(path).map_err(|source| StockError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "stock".to_string());
    Ok(StockSet::parse(name, &text, canonicalizer))
}

pub fn is_stock_terminated(route: &Route, stock: &StockSet) -> bool {
    stock.is_stock_terminated(route)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n_unique_leaves: usize,
    pub n_leaves_in_stock: usize,
    pub n_routes: usize,
    pub n_routes_fully_covered: usize,
}

pub fn coverage(routes: &[Route], stock: &StockSet) -> CoverageReport {
    let mut unique: HashSet<&MoleculeToken> = HashSet::new();
    let mut covered = 0;
    for route in routes {
        let mut all_in = true;
        for node in route.nodes().iter().filter(|n| n.is_leaf()) {
            unique.insert(&node.token);
            all_in &= stock.contains(&node.token);
        }
        if all_in {
            covered += 1;
        }
    }
    CoverageReport {
        n_unique_leaves: unique.len(),
        n_leaves_in_stock: unique.iter().filter(|t| stock.contains(t)).count(),
        n_routes: routes.len(),
        n_routes_fully_covered: covered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::ReactionStep;
    use std::collections::BTreeMap;

    fn two_step() -> Route {
        Route::new(
            MoleculeToken::new("T").unwrap(),
            vec![
                ReactionStep::parse("T", &["I", "L3"]).unwrap(),
                ReactionStep::parse("I", &["L1", "L2"]).unwrap(),
            ],
            BTreeMap::new(),
        )
        .unwrap()
    }

    fn short() -> Route {
        Route::new(
            MoleculeToken::new("T").unwrap(),
            vec![ReactionStep::parse("T", &["I", "L3"]).unwrap()],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn parse_counts_and_dedup() {
        let s = StockSet::parse("s", "L1\nL2\n\n# comment\nL3\n", Arc::new(Identity));
        assert_eq!(s.len(), 3);
        assert!(s.warnings().is_empty());
        let d = StockSet::parse("s", "L1\nL1\n", Arc::new(Identity));
        assert_eq!(d.len(), 1);
        assert_eq!(d.original_count(), 2);
        assert!(d.warnings()[0].contains("duplicate"));
    }

    #[test]
    fn empty_stock_is_a_warning() {
        let s = StockSet::parse("s", "# nothing\n", Arc::new(Identity));
        assert!(s.is_empty());
        assert_eq!(s.warnings(), ["stock is empty"]);
    }

    #[test]
    fn identity_is_case_sensitive() {
        let s = StockSet::parse("s", "l1\n", Arc::new(Identity));
        assert!(!s.contains_str("L1"));
        assert!(s.contains_str(" l1 "));
    }

    #[test]
    fn fold_ws_collapses() {
        let c = FoldWhitespace;
        assert_eq!(c.canonicalize("  a \t b  "), "a b");
        for raw in ["x", " a  b ", "\ta\n"] {
            assert_eq!(c.canonicalize(&c.canonicalize(raw)), c.canonicalize(raw));
            assert_eq!(Identity.canonicalize(&Identity.canonicalize(raw)), Identity.canonicalize(raw));
        }
        assert!(canonicalizer_by_id("nope").is_err());
    }

    #[test]
    fn termination_examples() {
        let stock = StockSet::identity("s", ["L1", "L2", "L3"]);
        assert!(is_stock_terminated(&two_step(), &stock));
        assert!(!is_stock_terminated(&short(), &stock));
        let t = Route::degenerate(MoleculeToken::new("T").unwrap());
        assert!(!is_stock_terminated(&t, &stock));
        assert!(is_stock_terminated(&t, &StockSet::identity("s", ["T"])));
    }

    #[test]
    fn coverage_examples() {
        let full = StockSet::identity("s", ["L1", "L2", "L3"]);
        let c = coverage(&[two_step()], &full);
        assert_eq!(
            (c.n_unique_leaves, c.n_leaves_in_stock, c.n_routes, c.n_routes_fully_covered),
            (3, 3, 1, 1)
        );
        let partial = StockSet::identity("s", ["L1", "L2"]);
        let c = coverage(&[two_step()], &partial);
        assert_eq!(
            (c.n_unique_leaves, c.n_leaves_in_stock, c.n_routes, c.n_routes_fully_covered),
            (3, 2, 1, 0)
        );
    }

    #[test]
    fn content_hash_ignores_order_and_comments() {
        let a = StockSet::parse("a", "B\nA\n", Arc::new(Identity));
        let b = StockSet::parse("b", "# c\nA\nB\nA\n", Arc::new(Identity));
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), StockSet::identity("c", ["A"]).content_hash());
    }
}
