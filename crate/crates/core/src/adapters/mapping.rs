//! `product>reactant.reactant;product>reactant...`, one route per line.
//!
//! The first step's product is the target. A line holding a single token is
//! the zero-step route.

use std::collections::BTreeMap;

use super::text::{content_lines, split_with_offsets, Line};
use super::{AdapterId, ParseError, RouteFormat};
use crate::route::{ReactionStep, Route};

pub(crate) struct MappingString;

fn parse_line(line: &Line<'_>, record: usize) -> Result<Route, ParseError> {
    let invalid = |source| ParseError::Validation { record, source };
    if !line.text.contains(['>', ';']) {
        let target = line.token(0, line.text.len())?;
        return Route::new(target, Vec::new(), BTreeMap::new()).map_err(invalid);
    }
    let mut steps = Vec::new();
    for (at, segment) in split_with_offsets(line.text, ";", 0) {
        if segment.trim().is_empty() {
            return Err(line.error(at, "empty step"));
        }
        let mut arrows = segment.match_indices('>').map(|(i, _)| i);
        let Some(gt) = arrows.next() else {
            return Err(line.error(at, "step is missing '>'"));
        };
        if let Some(extra) = arrows.next() {
            return Err(line.error(at + extra, "step has more than one '>'"));
        }
        let product = line.token(at, at + gt)?;
        let reactants = split_with_offsets(&segment[gt + 1..], ".", at + gt + 1)
            .map(|(start, piece)| line.token(start, start + piece.len()))
            .collect::<Result<Vec<_>, _>>()?;
        steps.push(ReactionStep::new(product, reactants).map_err(invalid)?);
    }
    let target = steps[0].product.clone();
    Route::new(target, steps, BTreeMap::new()).map_err(invalid)
}

impl RouteFormat for MappingString {
    fn id(&self) -> AdapterId {
        AdapterId::MappingString
    }

    fn parse(&self, text: &str, _warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError> {
        content_lines(text)
            .enumerate()
            .map(|(i, line)| parse_line(&line, i + 1))
            .collect()
    }

    fn emit(&self, routes: &[Route]) -> Option<String> {
        let mut out = String::new();
        for route in routes {
            if route.is_degenerate() {
                out.push_str(route.target().as_str());
            } else {
                let steps: Vec<String> = route
                    .preorder_steps()
                    .map(|s| {
                        let reactants: Vec<&str> = s.reactants.iter().map(|r| r.as_str()).collect();
                        format!("{}>{}", s.product, reactants.join("."))
                    })
                    .collect();
                out.push_str(&steps.join(";"));
            }
            out.push('\n');
        }
        Some(out)
    }
}
