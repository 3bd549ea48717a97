//! The canonical interchange format: one JSON object per line.
//!
//! ```text
//! {"target":"T","steps":[{"product":"T","reactants":["I","L3"]}],"metadata":{"rank":"1"}}
//! ```
//!
//! Steps may carry a `metadata` string map. Unknown top-level fields are kept
//! as `x-` metadata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::json::{keep_unknown, kind, syntax_error, Ctx};
use super::text::content_lines;
use super::{AdapterId, ParseError, RouteFormat};
use crate::route::{MoleculeToken, ReactionStep, Route, RouteError};

pub(crate) struct Interchange;

const ROOT_FIELDS: [&str; 3] = ["target", "steps", "metadata"];

/// One interchange line whose shape parsed, with the route validation outcome
/// kept separate so callers can record structurally invalid routes instead of
/// aborting.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    /// 1-based line number in the input.
    pub line: usize,
    pub target: MoleculeToken,
    pub metadata: BTreeMap<String, String>,
    pub route: Result<Route, RouteError>,
}

fn parse_line(ctx: &Ctx, value: &Value) -> Result<RawRecord, ParseError> {
    let obj = ctx.object(value, "$")?;
    let target = ctx.token(obj, "target", "$")?;
    let mut metadata = ctx.string_map(obj, "metadata", "$")?;
    keep_unknown(obj, &ROOT_FIELDS, &mut metadata);

    let mut steps = Vec::new();
    let mut step_error = None;
    for (i, s) in ctx.array(obj, "steps", "$")?.iter().enumerate() {
        let path = format!("$.steps[{i}]");
        let so = ctx.object(s, &path)?;
        let product = ctx.string(so, "product", &path)?;
        let reactants = ctx
            .array(so, "reactants", &path)?
            .iter()
            .enumerate()
            .map(|(j, r)| {
                r.as_str()
                    .ok_or_else(|| ctx.schema(format!("{path}.reactants[{j}]: expected a string, found {}", kind(r))))
            })
            .collect::<Result<Vec<&str>, _>>()?;
        let step_meta = ctx.string_map(so, "metadata", &path)?;
        match ReactionStep::parse(product, &reactants) {
            Ok(step) => steps.push(step.with_metadata(step_meta)),
            Err(e) => {
                step_error.get_or_insert(e);
            }
        }
    }
    let route = match step_error {
        Some(e) => Err(e),
        None => Route::new(target.clone(), steps, metadata.clone()),
    };
    Ok(RawRecord {
        line: ctx.record,
        target,
        metadata,
        route,
    })
}

/// Parses every non-blank line, keeping invalid routes as `Err` values.
/// Syntax and shape errors still abort.
pub fn parse_records(text: &str) -> Result<Vec<RawRecord>, ParseError> {
    content_lines(text)
        .map(|line| {
            let value: Value = serde_json::from_str(line.text).map_err(|e| match syntax_error(&e, line.text) {
                ParseError::Syntax { column, offset, message, .. } => ParseError::Syntax {
                    line: line.number,
                    column,
                    offset: line.offset + offset,
                    message,
                },
                other => other,
            })?;
            parse_line(&Ctx { record: line.number }, &value)
        })
        .collect()
}

/// Owned serde form of one interchange record. Field order is the on-disk
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub target: String,
    pub steps: Vec<StepRecord>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub product: String,
    pub reactants: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl RouteRecord {
    /// Steps keep the route's own order, so parsing the record back yields an
    /// identical route.
    pub fn from_route(route: &Route) -> Self {
        Self {
            target: route.target().as_str().to_string(),
            steps: route
                .steps()
                .iter()
                .map(|s| StepRecord {
                    product: s.product.as_str().to_string(),
                    reactants: s.reactants.iter().map(|r| r.as_str().to_string()).collect(),
                    metadata: s.metadata.clone(),
                })
                .collect(),
            metadata: route.metadata().clone(),
        }
    }

    pub fn to_route(&self) -> Result<Route, RouteError> {
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let reactants: Vec<&str> = s.reactants.iter().map(String::as_str).collect();
                Ok(ReactionStep::parse(&s.product, &reactants)?.with_metadata(s.metadata.clone()))
            })
            .collect::<Result<Vec<_>, RouteError>>()?;
        Route::new(MoleculeToken::new(&self.target)?, steps, self.metadata.clone())
    }
}

/// Serializes one route as a single line, without the trailing newline.
pub fn emit_record(route: &Route) -> String {
    serde_json::to_string(&RouteRecord::from_route(route)).expect("serializable")
}

pub fn emit_interchange(routes: &[Route]) -> String {
    let mut out = String::new();
    for r in routes {
        out.push_str(&emit_record(r));
        out.push('\n');
    }
    out
}

impl RouteFormat for Interchange {
    fn id(&self) -> AdapterId {
        AdapterId::Interchange
    }

    fn parse(&self, text: &str, _warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError> {
        parse_records(text)?
            .into_iter()
            .map(|r| r.route.map_err(|source| ParseError::Validation { record: r.line, source }))
            .collect()
    }

    fn emit(&self, routes: &[Route]) -> Option<String> {
        Some(emit_interchange(routes))
    }
}
