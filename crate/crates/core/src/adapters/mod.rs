//! Translation between native planner output shapes and the canonical route
//! model.
//!
//! Each [`AdapterId`] maps to one [`RouteFormat`] implementation. Parsers keep
//! routes in source order, since that order is the model's ranking. Grammars
//! are documented under `docs/formats/`.

mod alternating;
mod edge_list;
pub mod interchange;
mod json;
mod mapping;
mod nested;
mod recipe;
mod text;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::route::{Route, RouteError};

pub use interchange::{emit_interchange, parse_records, RawRecord, RouteRecord, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdapterId {
    /// Nested molecule nodes, reactions implicit.
    NestedMolJson,
    /// `product>reactant.reactant;...`
    MappingString,
    /// Molecule nodes alternating with explicit reaction nodes.
    AlternatingJson,
    /// Node map plus parent→child edge list.
    EdgeListJson,
    /// Forward `reactants>>product|...` with implicit chaining.
    RecipeString,
    /// The canonical line-delimited interchange records.
    Interchange,
}

impl AdapterId {
    pub const ALL: [AdapterId; 6] = [
        AdapterId::NestedMolJson,
        AdapterId::MappingString,
        AdapterId::AlternatingJson,
        AdapterId::EdgeListJson,
        AdapterId::RecipeString,
        AdapterId::Interchange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdapterId::NestedMolJson => "nested-mol-json",
            AdapterId::MappingString => "mapping-string",
            AdapterId::AlternatingJson => "alternating-json",
            AdapterId::EdgeListJson => "edge-list-json",
            AdapterId::RecipeString => "recipe-string",
            AdapterId::Interchange => "interchange",
        }
    }

    pub fn format(self) -> &'static dyn RouteFormat {
        match self {
            AdapterId::NestedMolJson => &nested::NestedMolJson,
            AdapterId::MappingString => &mapping::MappingString,
            AdapterId::AlternatingJson => &alternating::AlternatingJson,
            AdapterId::EdgeListJson => &edge_list::EdgeListJson,
            AdapterId::RecipeString => &recipe::RecipeString,
            AdapterId::Interchange => &interchange::Interchange,
        }
    }

    pub fn has_emitter(self) -> bool {
        self.format().emit(&[]).is_some()
    }
}

impl fmt::Display for AdapterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdapterId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdapterId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = AdapterId::ALL.iter().map(|a| a.name()).collect();
                format!("unknown adapter {s:?}; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column} (byte {offset}): {message}")]
    Syntax {
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },
    #[error("record {record}: unexpected shape: {message}")]
    Schema { record: usize, message: String },
    #[error("record {record}: invalid route: {source}")]
    Validation {
        record: usize,
        #[source]
        source: RouteError,
    },
}

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0} has no emitter")]
    UnsupportedEmitter(AdapterId),
}

/// One format's parser and, optionally, emitter.
pub trait RouteFormat: Sync {
    fn id(&self) -> AdapterId;

    fn parse(&self, text: &str, warnings: &mut Vec<String>) -> Result<Vec<Route>, ParseError>;

    /// `None` when the format has no emitter.
    fn emit(&self, _routes: &[Route]) -> Option<String> {
        None
    }
}

/// Routes read from one input, in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub routes: Vec<Route>,
    pub warnings: Vec<String>,
    pub source: String,
}

pub fn decode_utf8(input: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(input).map_err(|e| {
        let offset = e.valid_up_to();
        let (line, column) = text::line_col(input, offset);
        ParseError::Syntax {
            line,
            column,
            offset,
            message: "input is not valid UTF-8".to_string(),
        }
    })
}

pub fn parse(adapter: AdapterId, input: &[u8], source: impl Into<String>) -> Result<ParseReport, ParseError> {
    let text = decode_utf8(input)?;
    let mut warnings = Vec::new();
    let routes = adapter.format().parse(text, &mut warnings)?;
    Ok(ParseReport {
        routes,
        warnings,
        source: source.into(),
    })
}

pub fn emit(adapter: AdapterId, routes: &[Route]) -> Result<String, ConvertError> {
    adapter
        .format()
        .emit(routes)
        .ok_or(ConvertError::UnsupportedEmitter(adapter))
}

pub fn convert(from: AdapterId, to: AdapterId, input: &[u8]) -> Result<String, ConvertError> {
    if !to.has_emitter() {
        return Err(ConvertError::UnsupportedEmitter(to));
    }
    let report = parse(from, input, "convert")?;
    emit(to, &report.routes)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REFERENCE_KEY: &str = "T(I(L1,L2),L3)";

    fn key_of(adapter: AdapterId, text: &str) -> String {
        let report = parse(adapter, text.as_bytes(), "test").unwrap();
        assert_eq!(report.routes.len(), 1, "{adapter}");
        report.routes[0].canonical_key().as_str().to_string()
    }

    #[test]
    fn reference_route_in_every_format() {
        let fixtures = [
            (
                AdapterId::NestedMolJson,
                r#"{"smiles":"T","children":[{"smiles":"I","children":[{"smiles":"L1"},{"smiles":"L2"}]},{"smiles":"L3"}]}"#,
            ),
            (AdapterId::MappingString, "T>I.L3;I>L1.L2"),
            (AdapterId::RecipeString, "L1.L2>>I|L3>>T"),
            (
                AdapterId::EdgeListJson,
                r#"{"nodes":{"n0":"T","n1":"I","n2":"L1","n3":"L2","n4":"L3"},"edges":[["n0","n1"],["n0","n4"],["n1","n2"],["n1","n3"]]}"#,
            ),
            (
                AdapterId::AlternatingJson,
                r#"{"type":"mol","smiles":"T","children":[{"type":"reaction","children":[
                    {"type":"mol","smiles":"I","children":[{"type":"reaction","children":[
                        {"type":"mol","smiles":"L1"},{"type":"mol","smiles":"L2"}]}]},
                    {"type":"mol","smiles":"L3"}]}]}"#,
            ),
            (
                AdapterId::Interchange,
                r#"{"target":"T","steps":[{"product":"T","reactants":["I","L3"]},{"product":"I","reactants":["L1","L2"]}],"metadata":{}}"#,
            ),
        ];
        for (adapter, text) in fixtures {
            assert_eq!(key_of(adapter, text), REFERENCE_KEY, "{adapter}");
        }
    }

    #[test]
    fn names_round_trip() {
        for a in AdapterId::ALL {
            assert_eq!(a.name().parse::<AdapterId>().unwrap(), a);
        }
        assert!("yaml".parse::<AdapterId>().is_err());
    }

    #[test]
    fn emitters() {
        let with: Vec<AdapterId> = AdapterId::ALL.into_iter().filter(|a| a.has_emitter()).collect();
        assert_eq!(
            with,
            [AdapterId::NestedMolJson, AdapterId::MappingString, AdapterId::Interchange]
        );
        assert!(matches!(
            convert(AdapterId::MappingString, AdapterId::RecipeString, b"T>A"),
            Err(ConvertError::UnsupportedEmitter(AdapterId::RecipeString))
        ));
    }

    #[test]
    fn recipe_to_mapping() {
        let out = convert(AdapterId::RecipeString, AdapterId::MappingString, b"L1.L2>>I|L3>>T").unwrap();
        assert_eq!(out, "T>I.L3;I>L1.L2\n");
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let err = parse(AdapterId::MappingString, b"T>A\n\xff", "x").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, column: 1, offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn syntax_error_has_offset() {
        let err = convert(AdapterId::MappingString, AdapterId::Interchange, b"T>A;;B").unwrap_err();
        match err {
            ConvertError::Parse(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }
}
