//! Shared helpers for the JSON-based formats.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::text::offset_of;
use super::ParseError;
use crate::route::{MoleculeToken, RouteError};

pub(crate) fn syntax_error(err: &serde_json::Error, text: &str) -> ParseError {
    let (line, column) = (err.line().max(1), err.column().max(1));
    ParseError::Syntax {
        line,
        column,
        offset: offset_of(text, line, column),
        message: err.to_string(),
    }
}

/// Records of a JSON document: a top-level array, or a single object.
/// Whitespace-only input holds no records.
pub(crate) fn records(text: &str) -> Result<Vec<Value>, ParseError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc: Value = serde_json::from_str(text).map_err(|e| syntax_error(&e, text))?;
    match doc {
        Value::Array(items) => Ok(items),
        obj @ Value::Object(_) => Ok(vec![obj]),
        other => Err(ParseError::Schema {
            record: 1,
            message: format!("expected an object or an array of objects, found {}", kind(&other)),
        }),
    }
}

pub(crate) fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Metadata values are strings; anything else is kept as its JSON text.
pub(crate) fn meta_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub(crate) struct Ctx {
    pub record: usize,
}

impl Ctx {
    pub fn schema(&self, message: impl Into<String>) -> ParseError {
        ParseError::Schema {
            record: self.record,
            message: message.into(),
        }
    }

    pub fn invalid(&self, source: RouteError) -> ParseError {
        ParseError::Validation {
            record: self.record,
            source,
        }
    }

    pub fn object<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Map<String, Value>, ParseError> {
        v.as_object()
            .ok_or_else(|| self.schema(format!("{path}: expected an object, found {}", kind(v))))
    }

    pub fn string<'v>(&self, obj: &'v Map<String, Value>, key: &str, path: &str) -> Result<&'v str, ParseError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s),
            Some(other) => Err(self.schema(format!("{path}.{key}: expected a string, found {}", kind(other)))),
            None => Err(self.schema(format!("{path}: missing \"{key}\""))),
        }
    }

    pub fn token(&self, obj: &Map<String, Value>, key: &str, path: &str) -> Result<MoleculeToken, ParseError> {
        MoleculeToken::new(self.string(obj, key, path)?).map_err(|e| self.invalid(e))
    }

    /// Optional array field; absent or `null` reads as empty.
    pub fn array<'v>(&self, obj: &'v Map<String, Value>, key: &str, path: &str) -> Result<&'v [Value], ParseError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(&[]),
            Some(Value::Array(items)) => Ok(items),
            Some(other) => Err(self.schema(format!("{path}.{key}: expected an array, found {}", kind(other)))),
        }
    }

    /// Optional string-map field.
    pub fn string_map(&self, obj: &Map<String, Value>, key: &str, path: &str) -> Result<BTreeMap<String, String>, ParseError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(BTreeMap::new()),
            Some(Value::Object(m)) => Ok(m.iter().map(|(k, v)| (k.clone(), meta_value(v))).collect()),
            Some(other) => Err(self.schema(format!("{path}.{key}: expected an object, found {}", kind(other)))),
        }
    }
}

/// Copies fields outside `known` into `into` under an `x-` prefix.
pub(crate) fn keep_unknown(obj: &Map<String, Value>, known: &[&str], into: &mut BTreeMap<String, String>) {
    for (k, v) in obj {
        if !known.contains(&k.as_str()) {
            into.insert(format!("x-{k}"), meta_value(v));
        }
    }
}

/// Names of fields outside `known`.
pub(crate) fn unknown_fields(obj: &Map<String, Value>, known: &[&str]) -> Vec<String> {
    obj.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect()
}
