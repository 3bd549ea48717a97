use std::path::Path;

use routecast_core::adapters::{ConvertError, ParseError};
use routecast_core::benchmark::BenchmarkError;
use routecast_core::evaluation::{EvaluationError, PredictionError};
use routecast_core::mgt::MgtError;
use routecast_core::provenance::ProvenanceError;
use routecast_core::stats::StatsError;
use routecast_core::stock::StockError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag combination that clap could not catch.
    #[error("{0}")]
    Usage(String),
    /// Inputs were read but failed a check.
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("{path}: {source}")]
    Predictions {
        path: String,
        #[source]
        source: PredictionError,
    },
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Mgt(#[from] MgtError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Stock(#[from] StockError),
    #[error("provenance: {0}")]
    Provenance(#[from] ProvenanceError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
