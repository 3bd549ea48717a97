//! Content-addressed stage manifests and chain verification.
//!
//! Each pipeline stage records SHA-256 digests of the files it read and wrote
//! in `<root>/provenance/<stage>-<digest prefix>.manifest.json`, optionally
//! naming the digest of the manifest it continues from. Verification re-hashes
//! every referenced file and walks the parent links.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{self, Read};
use std::path::{Component, Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_DIR: &str = "provenance";
pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Error)]
pub enum ProvenanceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("{path} is outside the provenance root {root}")]
    OutsideRoot { path: String, root: String },
    #[error("{path}: malformed manifest: {message}")]
    Malformed { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ProvenanceError + '_ {
    move |source| ProvenanceError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Lowercase hex SHA-256 of a file's bytes, read in chunks.
pub fn hash_file(path: impl AsRef<Path>) -> Result<String, ProvenanceError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            ProvenanceError::MissingFile(path.display().to_string())
        } else {
            io_err(path)(e)
        }
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileRef {
    /// Root-relative, `/`-separated.
    pub path: String,
    pub sha256: String,
}

/// Fields are declared in alphabetical order so the serialized key order is
/// canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub created_at: String,
    pub inputs: Vec<FileRef>,
    pub outputs: Vec<FileRef>,
    pub parent: Option<String>,
    pub stage: String,
    pub tool_version: String,
}

impl Manifest {
    /// Canonical bytes: pretty JSON plus a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("serializable");
        out.push(b'\n');
        out
    }
}

/// Root-relative `/` path of `path`, which must lie under `root`.
pub fn relative_path(root: &Path, path: &Path) -> Result<String, ProvenanceError> {
    let outside = || ProvenanceError::OutsideRoot {
        path: path.display().to_string(),
        root: root.display().to_string(),
    };
    let abs_root = std::path::absolute(root).map_err(io_err(root))?;
    let abs = std::path::absolute(path).map_err(io_err(path))?;
    let rel = abs.strip_prefix(&abs_root).map_err(|_| outside())?;
    let mut parts = Vec::new();
    for c in rel.components() {
        match c {
            Component::Normal(s) => parts.push(s.to_string_lossy().into_owned()),
            Component::CurDir => {}
            _ => return Err(outside()),
        }
    }
    if parts.is_empty() {
        return Err(outside());
    }
    Ok(parts.join("/"))
}

fn resolve(root: &Path, rel: &str) -> PathBuf {
    rel.split('/').fold(root.to_path_buf(), |p, part| p.join(part))
}

pub struct ManifestBuilder {
    root: PathBuf,
    stage: String,
    tool_version: String,
    created_at: DateTime<Utc>,
    parent: Option<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(root: impl Into<PathBuf>, stage: impl Into<String>, tool_version: impl Into<String>) -> Self {
        Self {
            root: root.into(),
            stage: stage.into(),
            tool_version: tool_version.into(),
            created_at: Utc::now(),
            parent: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn created_at(mut self, at: DateTime<Utc>) -> Self {
        self.created_at = at;
        self
    }

    pub fn parent(mut self, parent: Option<String>) -> Self {
        self.parent = parent;
        self
    }

    pub fn input(mut self, path: impl Into<PathBuf>) -> Self {
        self.inputs.push(path.into());
        self
    }

    pub fn output(mut self, path: impl Into<PathBuf>) -> Self {
        self.outputs.push(path.into());
        self
    }

    fn refs(&self, paths: &[PathBuf]) -> Result<Vec<FileRef>, ProvenanceError> {
        let mut refs = paths
            .iter()
            .map(|p| {
                Ok(FileRef {
                    path: relative_path(&self.root, p)?,
                    sha256: hash_file(p)?,
                })
            })
            .collect::<Result<Vec<_>, ProvenanceError>>()?;
        refs.sort();
        refs.dedup();
        Ok(refs)
    }

    pub fn build(&self) -> Result<Manifest, ProvenanceError> {
        Ok(Manifest {
            created_at: self.created_at.to_rfc3339_opts(SecondsFormat::Secs, true),
            inputs: self.refs(&self.inputs)?,
            outputs: self.refs(&self.outputs)?,
            parent: self.parent.clone(),
            stage: self.stage.clone(),
            tool_version: self.tool_version.clone(),
        })
    }

    /// Writes the manifest under `<root>/provenance/` and returns its path and
    /// digest.
    pub fn write(&self) -> Result<(PathBuf, String), ProvenanceError> {
        let bytes = self.build()?.to_bytes();
        let digest = hash_bytes(&bytes);
        let dir = self.root.join(MANIFEST_DIR);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{}-{}{MANIFEST_SUFFIX}", self.stage, &digest[..16]));
        std::fs::write(&path, &bytes).map_err(io_err(&path))?;
        Ok((path, digest))
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, ProvenanceError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| ProvenanceError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Every `*.manifest.json` under `<root>/provenance/`, keyed by file digest.
/// Unreadable files are reported in the second value.
pub fn index_manifests(root: &Path) -> Result<(BTreeMap<String, PathBuf>, Vec<String>), ProvenanceError> {
    let dir = root.join(MANIFEST_DIR);
    let mut index = BTreeMap::new();
    let mut problems = Vec::new();
    if !dir.is_dir() {
        return Ok((index, problems));
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(io_err(&dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(MANIFEST_SUFFIX))
        .collect();
    entries.sort();
    for p in entries {
        match hash_file(&p) {
            Ok(h) => {
                index.insert(h, p);
            }
            Err(e) => problems.push(e.to_string()),
        }
    }
    Ok((index, problems))
}

/// Finds the manifest listing `output` (root-relative) among its outputs with
/// a matching current digest. The latest `created_at` wins when several do.
pub fn find_producer(root: &Path, output: &Path) -> Result<Option<String>, ProvenanceError> {
    let rel = relative_path(root, output)?;
    let digest = hash_file(output)?;
    let (index, _) = index_manifests(root)?;
    let mut best: Option<(String, String)> = None;
    for (h, p) in index {
        let Ok(m) = read_manifest(&p) else { continue };
        if m.outputs.iter().any(|o| o.path == rel && o.sha256 == digest) {
            let key = m.created_at.clone();
            if best.as_ref().is_none_or(|(k, _)| key >= *k) {
                best = Some((key, h));
            }
        }
    }
    Ok(best.map(|(_, h)| h))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub file: String,
    pub expected: String,
    /// `None` when the file is missing.
    pub actual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BrokenLink {
    pub manifest: String,
    pub parent: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub manifests: Vec<String>,
    pub mismatches: Vec<Mismatch>,
    pub broken_links: Vec<BrokenLink>,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty() && self.broken_links.is_empty() && self.problems.is_empty()
    }

    fn merge(&mut self, other: VerifyReport) {
        self.manifests.extend(other.manifests);
        self.mismatches.extend(other.mismatches);
        self.broken_links.extend(other.broken_links);
        self.problems.extend(other.problems);
        self.manifests.sort();
        self.manifests.dedup();
        self.mismatches.sort_by(|a, b| a.file.cmp(&b.file).then(a.expected.cmp(&b.expected)));
        self.mismatches.dedup();
        self.broken_links.sort_by(|a, b| a.manifest.cmp(&b.manifest).then(a.parent.cmp(&b.parent)));
        self.broken_links.dedup();
        self.problems.sort();
        self.problems.dedup();
    }
}

struct Walker<'a> {
    root: &'a Path,
    index: BTreeMap<String, PathBuf>,
    checked_files: HashSet<(String, String)>,
    report: VerifyReport,
}

impl Walker<'_> {
    fn label(&self, path: &Path) -> String {
        relative_path(self.root, path).unwrap_or_else(|_| path.display().to_string())
    }

    fn check_file(&mut self, f: &FileRef, manifest: &str) {
        if !is_sha256_hex(&f.sha256) {
            self.report
                .problems
                .push(format!("{manifest}: malformed digest {:?} for {}", f.sha256, f.path));
            return;
        }
        if !self.checked_files.insert((f.path.clone(), f.sha256.clone())) {
            return;
        }
        let actual = match hash_file(resolve(self.root, &f.path)) {
            Ok(h) if h == f.sha256 => return,
            Ok(h) => Some(h),
            Err(_) => None,
        };
        if !self.report.mismatches.iter().any(|m| m.file == f.path) {
            self.report.mismatches.push(Mismatch {
                file: f.path.clone(),
                expected: f.sha256.clone(),
                actual,
            });
        }
    }

    fn walk(&mut self, leaf: &Path) {
        let mut visited = BTreeSet::new();
        let mut current = leaf.to_path_buf();
        loop {
            let label = self.label(&current);
            if !visited.insert(label.clone()) {
                self.report.problems.push(format!("{label}: parent links form a loop"));
                return;
            }
            let m = match read_manifest(&current) {
                Ok(m) => m,
                Err(e) => {
                    self.report.problems.push(e.to_string());
                    return;
                }
            };
            self.report.manifests.push(label.clone());
            for f in m.inputs.iter().chain(&m.outputs) {
                self.check_file(f, &label);
            }
            let Some(parent) = m.parent else { return };
            if !is_sha256_hex(&parent) {
                self.report.problems.push(format!("{label}: malformed parent digest {parent:?}"));
                return;
            }
            let Some(parent_path) = self.index.get(&parent).cloned() else {
                self.report.broken_links.push(BrokenLink {
                    manifest: label,
                    parent,
                    reason: "no manifest with this digest".to_string(),
                });
                return;
            };
            if let Ok(pm) = read_manifest(&parent_path) {
                let produced: HashSet<&FileRef> = pm.outputs.iter().collect();
                if !m.inputs.iter().any(|i| produced.contains(i)) {
                    self.report.broken_links.push(BrokenLink {
                        manifest: label,
                        parent: parent.clone(),
                        reason: "parent produced none of this stage's inputs".to_string(),
                    });
                }
            }
            current = parent_path;
        }
    }
}

/// Verifies the chain ending at `leaf`. Failures are report entries.
pub fn verify_chain(root: &Path, leaf: &Path) -> Result<VerifyReport, ProvenanceError> {
    let (index, problems) = index_manifests(root)?;
    let mut w = Walker {
        root,
        index,
        checked_files: HashSet::new(),
        report: VerifyReport {
            problems,
            ..VerifyReport::default()
        },
    };
    w.walk(leaf);
    let mut out = VerifyReport::default();
    out.merge(w.report);
    Ok(out)
}

/// Verifies every chain in `<root>/provenance/`, starting from the manifests
/// no other manifest names as parent.
pub fn verify_all(root: &Path) -> Result<VerifyReport, ProvenanceError> {
    let (index, problems) = index_manifests(root)?;
    let mut referenced = HashSet::new();
    let mut all = Vec::new();
    for (h, p) in &index {
        if let Ok(m) = read_manifest(p) {
            if let Some(parent) = m.parent {
                referenced.insert(parent);
            }
        }
        all.push((h.clone(), p.clone()));
    }
    let mut report = VerifyReport {
        problems,
        ..VerifyReport::default()
    };
    let mut w = Walker {
        root,
        index,
        checked_files: HashSet::new(),
        report: VerifyReport::default(),
    };
    for (_, p) in all.iter().filter(|(h, _)| !referenced.contains(h)) {
        w.walk(p);
    }
    report.merge(w.report);
    Ok(report)
}
