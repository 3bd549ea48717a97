//! Forward recipe strings: `reactants>>product` steps joined by `|`.
//!
//! Each step's product is implicitly prepended to the next step's reactants
//! (unless already listed there), so a step after the first may leave its
//! reactant side empty. The last product is the target. A line holding a
//! single token is the zero-step route. Parse-only: branching routes have no
//! recipe form.

use std::collections::BTreeMap;

use super::text::{content_lines, split_with_offsets, Line};
use super::{AdapterId, ParseError, RouteFormat};
use crate::route::{MoleculeToken, ReactionStep, Route};

pub(crate) struct RecipeString;

fn parse_line(line: &Line<'_>, record: usize) -> Result<Route, ParseError> {
    let invalid = |source| ParseError::Validation { record, source };
    if !line.text.contains(['>', '|']) {
        let target = line.token(0, line.text.len())?;
        return Route::new(target, Vec::new(), BTreeMap::new()).map_err(invalid);
    }
    let mut steps: Vec<ReactionStep> = Vec::new();
    let mut previous: Option<MoleculeToken> = None;
    for (at, segment) in split_with_offsets(line.text, "|", 0) {
        let Some(arrow) = segment.find(">>") else {
            return Err(line.error(at, "step is missing '>>'"));
        };
        let reactant_side = &segment[..arrow];
        let mut reactants = if reactant_side.trim().is_empty() {
            Vec::new()
        } else {
            split_with_offsets(reactant_side, ".", at)
                .map(|(start, piece)| line.token(start, start + piece.len()))
                .collect::<Result<Vec<_>, _>>()?
        };
        if let Some(prev) = previous.take() {
            if !reactants.contains(&prev) {
                reactants.insert(0, prev);
            }
        }
        if reactants.is_empty() {
            return Err(line.error(at, "first step has no reactants"));
        }
        let product = line.token(at + arrow + 2, at + segment.len())?;
        previous = Some(product.clone());
        steps.push(ReactionStep::new(product, reactants).map_err(invalid)?);
    }
    let target = previous.expect("at least one step");
    Route::new(target, steps, BTreeMap::new()).map_err(invalid)
}

impl RouteFormat for RecipeString {
    fn id(&self) -> AdapterId {
        AdapterId::RecipeString
    }

    fn parse(&self, text: &str, _warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError> {
        content_lines(text)
            .enumerate()
            .map(|(i, line)| parse_line(&line, i + 1))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Route>, ParseError> {
        RecipeString.parse(text, &mut Vec::new())
    }

    #[test]
    fn chaining() {
        let r = &parse("L1.L2>>I|L3>>T").unwrap()[0];
        assert_eq!(r.target().as_str(), "T");
        assert_eq!(r.steps()[1].reactants[0].as_str(), "I");
        let r = &parse("A>>B|>>C|x>>D").unwrap()[0];
        assert_eq!(r.canonical_key().as_str(), "D(C(B(A)),x)");
        // Explicitly listing the chained product does not duplicate it.
        let r = &parse("L1.L2>>I|L3.I>>T").unwrap()[0];
        assert_eq!(r.steps()[1].reactants.len(), 2);
    }

    #[test]
    fn degenerate_and_errors() {
        assert!(parse("T\n").unwrap()[0].is_degenerate());
        assert!(matches!(parse(">>T"), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("A>B"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("A>>"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("A>>>B"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("A>>B|B>>A"), Err(ParseError::Validation { .. })));
    }
}
