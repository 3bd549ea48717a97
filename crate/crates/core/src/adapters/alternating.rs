//! Molecule nodes alternating with explicit reaction nodes:
//! `{"type":"mol","smiles":"T","children":[{"type":"reaction","children":[...]}]}`.
//!
//! A molecule node has zero or one reaction child. Extra keys on a reaction
//! node (template hashes, scores) become that step's metadata.

use serde_json::{Map, Value};

use super::json::{keep_unknown, meta_value, records, unknown_fields, Ctx};
use super::{AdapterId, ParseError, RouteFormat};
use crate::route::{MoleculeToken, ReactionStep, Route};

pub(crate) struct AlternatingJson;

const MOL_FIELDS: [&str; 3] = ["type", "smiles", "children"];
const ROOT_FIELDS: [&str; 4] = ["type", "smiles", "children", "metadata"];

fn expect_type(ctx: &Ctx, obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), ParseError> {
    let found = ctx.string(obj, "type", path)?;
    if allowed.contains(&found) {
        Ok(())
    } else {
        Err(ctx.schema(format!("{path}: expected type {allowed:?}, found {found:?}")))
    }
}

fn walk_mol(
    ctx: &Ctx,
    node: &Value,
    path: &str,
    steps: &mut Vec<Option<ReactionStep>>,
    warnings: &mut Vec<String>,
) -> Result<MoleculeToken, ParseError> {
    let obj = ctx.object(node, path)?;
    expect_type(ctx, obj, path, &["mol", "molecule"])?;
    let token = ctx.token(obj, "smiles", path)?;
    if path != "$" {
        let extra = unknown_fields(obj, &MOL_FIELDS);
        if !extra.is_empty() {
            warnings.push(format!("record {}: ignored fields {extra:?} at {path}", ctx.record));
        }
    }
    let reactions = ctx.array(obj, "children", path)?;
    match reactions {
        [] => {}
        [reaction] => {
            let rpath = format!("{path}.children[0]");
            let robj = ctx.object(reaction, &rpath)?;
            expect_type(ctx, robj, &rpath, &["reaction"])?;
            let slot = steps.len();
            steps.push(None);
            let reactants = ctx
                .array(robj, "children", &rpath)?
                .iter()
                .enumerate()
                .map(|(i, c)| walk_mol(ctx, c, &format!("{rpath}.children[{i}]"), steps, warnings))
                .collect::<Result<Vec<_>, _>>()?;
            let metadata = robj
                .iter()
                .filter(|(k, _)| k.as_str() != "type" && k.as_str() != "children")
                .map(|(k, v)| (k.clone(), meta_value(v)))
                .collect();
            let step = ReactionStep::new(token.clone(), reactants)
                .map_err(|e| ctx.invalid(e))?
                .with_metadata(metadata);
            steps[slot] = Some(step);
        }
        _ => {
            return Err(ctx.schema(format!(
                "{path}: {} alternative reactions; a route allows one per molecule",
                reactions.len()
            )))
        }
    }
    Ok(token)
}

fn parse_record(ctx: &Ctx, value: &Value, warnings: &mut Vec<String>) -> Result<Route, ParseError> {
    let obj = ctx.object(value, "$")?;
    let mut metadata = ctx.string_map(obj, "metadata", "$")?;
    keep_unknown(obj, &ROOT_FIELDS, &mut metadata);
    let mut steps = Vec::new();
    let target = walk_mol(ctx, value, "$", &mut steps, warnings)?;
    let steps = steps.into_iter().map(|s| s.expect("slot filled")).collect();
    Route::new(target, steps, metadata).map_err(|e| ctx.invalid(e))
}

impl RouteFormat for AlternatingJson {
    fn id(&self) -> AdapterId {
        AdapterId::AlternatingJson
    }

    fn parse(&self, text: &str, warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError> {
        records(text)?
            .iter()
            .enumerate()
            .map(|(i, v)| parse_record(&Ctx { record: i + 1 }, v, warnings))
            .collect()
    }
}
