//! Node map plus edge list:
//! `{"nodes": {"n0": "T", ...}, "edges": [["n0", "n1"], ...]}`.
//!
//! Edges point from product to reactant. Exactly one node may lack an
//! incoming edge; it is the target. Each node with outgoing edges is produced
//! by one reaction whose reactants follow edge order.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde_json::Value;

use super::json::{keep_unknown, kind, records, Ctx};
use super::{AdapterId, ParseError, RouteFormat};
use crate::route::{MoleculeToken, ReactionStep, Route};

pub(crate) struct EdgeListJson;

fn parse_record(ctx: &Ctx, value: &Value) -> Result<Route, ParseError> {
    let obj = ctx.object(value, "$")?;
    let mut metadata = ctx.string_map(obj, "metadata", "$")?;
    keep_unknown(obj, &["nodes", "edges", "metadata"], &mut metadata);

    let nodes = match obj.get("nodes") {
        Some(Value::Object(m)) => m,
        Some(other) => return Err(ctx.schema(format!("$.nodes: expected an object, found {}", kind(other)))),
        None => return Err(ctx.schema("$: missing \"nodes\"")),
    };
    let mut tokens: BTreeMap<&str, MoleculeToken> = BTreeMap::new();
    for (id, v) in nodes {
        let raw = v
            .as_str()
            .ok_or_else(|| ctx.schema(format!("$.nodes.{id}: expected a string, found {}", kind(v))))?;
        tokens.insert(id, MoleculeToken::new(raw).map_err(|e| ctx.invalid(e))?);
    }
    if tokens.is_empty() {
        return Err(ctx.schema("$.nodes: no nodes"));
    }

    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut has_parent: HashSet<&str> = HashSet::new();
    for (i, edge) in ctx.array(obj, "edges", "$")?.iter().enumerate() {
        let pair = match edge.as_array().map(Vec::as_slice) {
            Some([Value::String(a), Value::String(b)]) => (a.as_str(), b.as_str()),
            _ => return Err(ctx.schema(format!("$.edges[{i}]: expected a [parent, child] pair of node ids"))),
        };
        for id in [pair.0, pair.1] {
            if !tokens.contains_key(id) {
                return Err(ctx.schema(format!("$.edges[{i}]: unknown node {id:?}")));
            }
        }
        children.entry(pair.0).or_default().push(pair.1);
        has_parent.insert(pair.1);
    }

    let roots: Vec<&str> = tokens.keys().copied().filter(|id| !has_parent.contains(id)).collect();
    let root = match roots.as_slice() {
        [root] => *root,
        [] => return Err(ctx.schema("no root node (every node has a parent)")),
        many => return Err(ctx.schema(format!("expected one root node, found {}: {many:?}", many.len()))),
    };

    // Steps in pre-order from the root, then any nodes the walk could not reach.
    let mut order: Vec<&str> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        order.push(id);
        if let Some(kids) = children.get(id) {
            stack.extend(kids.iter().rev());
        }
    }
    order.extend(tokens.keys().copied().filter(|id| !seen.contains(id)));

    let mut steps = Vec::new();
    for id in order {
        if let Some(kids) = children.get(id) {
            let reactants = kids.iter().map(|k| tokens[k].clone()).collect();
            steps.push(ReactionStep::new(tokens[id].clone(), reactants).map_err(|e| ctx.invalid(e))?);
        }
    }
    Route::new(tokens[root].clone(), steps, metadata).map_err(|e| ctx.invalid(e))
}

impl RouteFormat for EdgeListJson {
    fn id(&self) -> AdapterId {
        AdapterId::EdgeListJson
    }

    fn parse(&self, text: &str, _warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError> {
        records(text)?
            .iter()
            .enumerate()
            .map(|(i, v)| parse_record(&Ctx { record: i + 1 }, v))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Route>, ParseError> {
        EdgeListJson.parse(text, &mut Vec::new())
    }

    #[test]
    fn shared_leaf_node_is_fine() {
        let r = &parse(r#"{"nodes":{"a":"T","b":"I","c":"L"},"edges":[["a","b"],["a","c"],["b","c"]],"source":"x"}"#)
            .unwrap()[0];
        assert_eq!(r.canonical_key().as_str(), "T(I(L),L)");
        assert_eq!(r.meta("x-source"), Some("x"));
    }

    #[test]
    fn single_node_is_degenerate() {
        assert!(parse(r#"{"nodes":{"a":"T"},"edges":[]}"#).unwrap()[0].is_degenerate());
    }

    #[test]
    fn errors() {
        let two_roots = r#"{"nodes":{"a":"T","b":"X"},"edges":[]}"#;
        assert!(matches!(parse(two_roots), Err(ParseError::Schema { .. })));
        let unknown = r#"{"nodes":{"a":"T"},"edges":[["a","z"]]}"#;
        assert!(matches!(parse(unknown), Err(ParseError::Schema { .. })));
        let loop_only = r#"{"nodes":{"a":"T","b":"I"},"edges":[["a","b"],["b","a"]]}"#;
        assert!(matches!(parse(loop_only), Err(ParseError::Schema { .. })));
        let back_edge = r#"{"nodes":{"a":"T","b":"I","c":"J"},"edges":[["a","b"],["b","c"],["c","b"]]}"#;
        assert!(matches!(parse(back_edge), Err(ParseError::Validation { .. })));
        let bad_edge = r#"{"nodes":{"a":"T"},"edges":[["a"]]}"#;
        assert!(matches!(parse(bad_edge), Err(ParseError::Schema { .. })));
    }
}
