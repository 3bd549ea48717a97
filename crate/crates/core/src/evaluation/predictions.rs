use std::collections::BTreeMap;

use thiserror::Error;

use crate::adapters::{parse_records, ParseError};
use crate::route::{Route, RouteError};

pub const RANK_KEY: &str = "rank";

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: missing metadata key {key:?}")]
    MissingKey { line: usize, key: &'static str },
    #[error("line {line}: rank {value:?} is not a positive integer")]
    BadRank { line: usize, value: String },
    #[error("target {target_id}: ranks are not 1..={n} (got {ranks:?})")]
    NonContiguousRanks {
        target_id: String,
        n: usize,
        ranks: Vec<usize>,
    },
}

/// Raw ranked model output per target, invalid routes included.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    pub model_id: String,
    pub by_target: BTreeMap<String, Vec<Result<Route, RouteError>>>,
}

impl PredictionSet {
    /// Reads interchange records carrying `target_id` and `rank` metadata.
    /// Ranks must run 1..=n for each target; records may appear in any order.
    pub fn from_interchange(model_id: impl Into<String>, text: &str) -> Result<Self, PredictionError> {
        let mut ranked: BTreeMap<String, Vec<(usize, Result<Route, RouteError>)>> = BTreeMap::new();
        for rec in parse_records(text)? {
            let target_id = rec
                .metadata
                .get(crate::benchmark::TARGET_ID_KEY)
                .ok_or(PredictionError::MissingKey {
                    line: rec.line,
                    key: crate::benchmark::TARGET_ID_KEY,
                })?
                .clone();
            let raw = rec.metadata.get(RANK_KEY).ok_or(PredictionError::MissingKey {
                line: rec.line,
                key: RANK_KEY,
            })?;
            let rank = raw
                .parse::<usize>()
                .ok()
                .filter(|&r| r >= 1)
                .ok_or_else(|| PredictionError::BadRank {
                    line: rec.line,
                    value: raw.clone(),
                })?;
            ranked.entry(target_id).or_default().push((rank, rec.route));
        }
        let mut by_target = BTreeMap::new();
        for (target_id, mut items) in ranked {
            items.sort_by_key(|(r, _)| *r);
            let ranks: Vec<usize> = items.iter().map(|(r, _)| *r).collect();
            if ranks.iter().enumerate().any(|(i, &r)| r != i + 1) {
                return Err(PredictionError::NonContiguousRanks {
                    target_id,
                    n: ranks.len(),
                    ranks,
                });
            }
            by_target.insert(target_id, items.into_iter().map(|(_, r)| r).collect());
        }
        Ok(Self {
            model_id: model_id.into(),
            by_target,
        })
    }

    pub fn n_routes(&self) -> usize {
        self.by_target.values().map(Vec::len).sum()
    }
}
