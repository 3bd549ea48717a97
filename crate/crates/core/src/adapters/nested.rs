//! Nested molecule nodes with implicit reactions:
//! `{"smiles": "T", "children": [{"smiles": "I", ...}, ...]}`.
//!
//! A node with children is produced by one reaction whose reactants are the
//! children. The root may carry a `metadata` string map; other unknown root
//! fields are kept as `x-` metadata.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use super::json::{keep_unknown, records, unknown_fields, Ctx};
use super::{AdapterId, ParseError, RouteFormat};
use crate::route::{MoleculeToken, NodeId, ReactionStep, Route};

pub(crate) struct NestedMolJson;

const ROOT_FIELDS: [&str; 3] = ["smiles", "children", "metadata"];
const NODE_FIELDS: [&str; 2] = ["smiles", "children"];

fn walk(
    ctx: &Ctx,
    node: &Value,
    path: &str,
    steps: &mut Vec<Option<ReactionStep>>,
    warnings: &mut Vec<String>,
) -> Result<MoleculeToken, ParseError> {
    let obj = ctx.object(node, path)?;
    let token = ctx.token(obj, "smiles", path)?;
    if !path.is_empty() {
        let extra = unknown_fields(obj, &NODE_FIELDS);
        if !extra.is_empty() {
            warnings.push(format!("record {}: ignored fields {extra:?} at {path}", ctx.record));
        }
    }
    let children = ctx.array(obj, "children", path)?;
    if !children.is_empty() {
        let slot = steps.len();
        steps.push(None);
        let reactants = children
            .iter()
            .enumerate()
            .map(|(i, c)| walk(ctx, c, &format!("{path}.children[{i}]"), steps, warnings))
            .collect::<Result<Vec<_>, _>>()?;
        steps[slot] = Some(ReactionStep::new(token.clone(), reactants).map_err(|e| ctx.invalid(e))?);
    }
    Ok(token)
}

fn parse_record(ctx: &Ctx, value: &Value, warnings: &mut Vec<String>) -> Result<Route, ParseError> {
    let obj = ctx.object(value, "$")?;
    let mut metadata = ctx.string_map(obj, "metadata", "$")?;
    keep_unknown(obj, &ROOT_FIELDS, &mut metadata);
    let mut steps = Vec::new();
    let target = walk(ctx, value, "", &mut steps, warnings)?;
    let steps = steps.into_iter().map(|s| s.expect("slot filled")).collect();
    Route::new(target, steps, metadata).map_err(|e| ctx.invalid(e))
}

#[derive(Serialize)]
struct MolNode<'a> {
    smiles: &'a str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    children: Vec<MolNode<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<&'a BTreeMap<String, String>>,
}

fn to_node(route: &Route, id: NodeId) -> MolNode<'_> {
    let node = &route.nodes()[id.0];
    MolNode {
        smiles: node.token.as_str(),
        children: node.children.iter().map(|&c| to_node(route, c)).collect(),
        metadata: None,
    }
}

impl RouteFormat for NestedMolJson {
    fn id(&self) -> AdapterId {
        AdapterId::NestedMolJson
    }

    fn parse(&self, text: &str, warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError> {
        records(text)?
            .iter()
            .enumerate()
            .map(|(i, v)| parse_record(&Ctx { record: i + 1 }, v, warnings))
            .collect()
    }

    fn emit(&self, routes: &[Route]) -> Option<String> {
        let nodes: Vec<MolNode<'_>> = routes
            .iter()
            .map(|r| {
                let mut root = to_node(r, r.root());
                if !r.metadata().is_empty() {
                    root.metadata = Some(r.metadata());
                }
                root
            })
            .collect();
        let mut out = serde_json::to_string(&nodes).expect("serializable");
        out.push('\n');
        Some(out)
    }
}
