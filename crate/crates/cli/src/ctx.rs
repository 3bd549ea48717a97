//! Shared file handling and manifest recording for the subcommands.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use routecast_core::adapters::{parse, AdapterId};
use routecast_core::benchmark::StrataSpec;
use routecast_core::provenance::{find_producer, ManifestBuilder};
use routecast_core::route::Route;
use routecast_core::stock::{load_stock, StockSet};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::cli::StockArgs;
use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = concat!("routecast ", env!("CARGO_PKG_VERSION"));

pub struct Ctx {
    pub root: PathBuf,
    pub no_manifest: bool,
    pub created_at: DateTime<Utc>,
}

/// `SOURCE_DATE_EPOCH` pins manifest timestamps for reproducible reruns.
pub fn timestamp() -> Result<DateTime<Utc>> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(raw) => raw
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|s| DateTime::from_timestamp(s, 0))
            .ok_or_else(|| CliError::Usage(format!("SOURCE_DATE_EPOCH={raw:?} is not a Unix timestamp"))),
        Err(_) => Ok(Utc::now()),
    }
}

impl Ctx {
    /// Writes the stage manifest. The parent is the manifest that produced
    /// the first input (in the order given) that has a recorded producer.
    pub fn record(&self, stage: &str, inputs: &[&Path], outputs: &[&Path]) -> Result<Option<String>> {
        if self.no_manifest {
            return Ok(None);
        }
        let parent = self.parent_of(inputs)?;
        let mut b = ManifestBuilder::new(&self.root, stage, TOOL_VERSION)
            .created_at(self.created_at)
            .parent(parent);
        for p in inputs {
            b = b.input(*p);
        }
        for p in outputs {
            b = b.output(*p);
        }
        let (path, digest) = b.write()?;
        eprintln!("manifest {}", path.display());
        Ok(Some(digest))
    }

    pub fn parent_of(&self, inputs: &[&Path]) -> Result<Option<String>> {
        if self.no_manifest {
            return Ok(None);
        }
        for p in inputs {
            if let Some(h) = find_producer(&self.root, p)? {
                return Ok(Some(h));
            }
        }
        Ok(None)
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(CliError::io(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|e| CliError::Invalid(format!("{}: not UTF-8: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, &to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_routes(path: &Path, adapter: AdapterId) -> Result<Vec<Route>> {
    let bytes = read_bytes(path)?;
    let report = parse(adapter, &bytes, path.display().to_string()).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    for w in &report.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(report.routes)
}

pub fn stock(args: &StockArgs) -> Result<StockSet> {
    let s = load_stock(&args.stock, &args.canonicalizer)?;
    for w in s.warnings() {
        eprintln!("warning: {}: {w}", args.stock.display());
    }
    Ok(s)
}

/// A preset name, or a JSON file holding a strata spec.
pub fn strata(arg: &str) -> Result<StrataSpec> {
    if routecast_core::benchmark::PRESETS.contains(&arg) {
        return Ok(StrataSpec::preset(arg)?);
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "--strata {arg:?} is neither a preset ({}) nor a file",
            routecast_core::benchmark::PRESETS.join(", ")
        )));
    }
    let spec: StrataSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

pub fn strata_path(arg: &str) -> Option<&Path> {
    let p = Path::new(arg);
    p.is_file().then_some(p)
}
