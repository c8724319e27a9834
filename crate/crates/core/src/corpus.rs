//! Corpus manifests: annotated example solutions and their declared
//! semantic inputs and outputs.
//!
//! A manifest is a JSON document:
//!
//! ```json
//! {
//!   "corpus_name": "fees",
//!   "version": "1",
//!   "entries": [
//!     {
//!       "id": "avg_fee",
//!       "source": "avg_fee.py",
//!       "inputs": [{ "label": "mcc", "anchor": "rule_applies" }],
//!       "outputs": [{ "label": "average fee", "anchor": "output_average_fee" }],
//!       "knowledge": { "rule_applies": "A rule with an empty MCC list matches every MCC." }
//!     }
//!   ]
//! }
//! ```
//!
//! `source` is resolved relative to the manifest's directory. Every I/O label
//! names the function that consumes it (inputs) or returns it (outputs).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::normalize_label;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file {}", path.display())]
    MissingFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest at `{path}`: {message}")]
    MalformedManifest { path: String, message: String },
    #[error("duplicate entry id `{0}`")]
    DuplicateEntryId(String),
}

/// A semantic I/O label and the function it attaches to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoDecl {
    pub label: String,
    pub anchor: String,
}

impl IoDecl {
    pub fn new(label: impl Into<String>, anchor: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            anchor: anchor.into(),
        }
    }

    pub fn normalized_label(&self) -> String {
        normalize_label(&self.label)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IoSpec {
    pub inputs: Vec<IoDecl>,
    pub outputs: Vec<IoDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub entry_id: String,
    /// Source path as written in the manifest.
    pub source_path: String,
    pub source_text: String,
    pub io_spec: IoSpec,
    pub knowledge_map: BTreeMap<String, String>,
}

impl CorpusEntry {
    #[cfg(test)]
    pub(crate) fn for_test(id: &str, source: &str) -> Self {
        Self {
            entry_id: id.to_owned(),
            source_path: format!("{id}.py"),
            source_text: source.to_owned(),
            io_spec: IoSpec::default(),
            knowledge_map: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusMetadata {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub metadata: CorpusMetadata,
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    id: String,
    source: String,
    inputs: Vec<IoDecl>,
    outputs: Vec<IoDecl>,
    #[serde(default)]
    knowledge: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    corpus_name: String,
    version: String,
    entries: Vec<ManifestEntry>,
}

/// Reads a manifest and every source file it references.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| CorpusError::MissingFile {
        path: manifest_path.to_owned(),
        source,
    })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base)
}

/// Parses manifest text; `base` is the directory sources are resolved against.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Corpus, CorpusError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|e| {
        CorpusError::MalformedManifest {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        }
    })?;

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(manifest.entries.len());
    for (i, m) in manifest.entries.into_iter().enumerate() {
        if m.id.trim().is_empty() {
            return Err(malformed(format!("entries[{i}].id"), "entry id must not be empty"));
        }
        if m.inputs.is_empty() {
            return Err(malformed(format!("entries[{i}].inputs"), "at least one input is required"));
        }
        if m.outputs.is_empty() {
            return Err(malformed(format!("entries[{i}].outputs"), "at least one output is required"));
        }
        if !seen.insert(m.id.clone()) {
            return Err(CorpusError::DuplicateEntryId(m.id));
        }
        let path = base.join(&m.source);
        let source_text = fs::read_to_string(&path)
            .map_err(|source| CorpusError::MissingFile { path, source })?;
        entries.push(CorpusEntry {
            entry_id: m.id,
            source_path: m.source,
            source_text,
            io_spec: IoSpec {
                inputs: m.inputs,
                outputs: m.outputs,
            },
            knowledge_map: m.knowledge,
        });
    }
    Ok(Corpus {
        metadata: CorpusMetadata {
            name: manifest.corpus_name,
            version: manifest.version,
        },
        entries,
    })
}

fn malformed(path: String, message: &str) -> CorpusError {
    CorpusError::MalformedManifest {
        path,
        message: message.to_owned(),
    }
}

/// Manifest JSON for `corpus`. Source files are referenced, not written.
pub fn serialize_manifest(corpus: &Corpus) -> String {
    let manifest = Manifest {
        corpus_name: corpus.metadata.name.clone(),
        version: corpus.metadata.version.clone(),
        entries: corpus
            .entries
            .iter()
            .map(|e| ManifestEntry {
                id: e.entry_id.clone(),
                source: e.source_path.clone(),
                inputs: e.io_spec.inputs.clone(),
                outputs: e.io_spec.outputs.clone(),
                knowledge: e.knowledge_map.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    /// A knowledge annotation names a function the source does not define.
    UnknownKnowledgeTarget(String),
    /// An input label normalizes to the empty string.
    EmptyInputLabel { index: usize, raw: String },
    EmptyOutputLabel { index: usize, raw: String },
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UnknownKnowledgeTarget(name) => {
                write!(f, "knowledge annotation for undefined function `{name}`")
            }
            Self::EmptyInputLabel { index, raw } => {
                write!(f, "input {index} label {raw:?} is empty after normalization")
            }
            Self::EmptyOutputLabel { index, raw } => {
                write!(f, "output {index} label {raw:?} is empty after normalization")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub entry_id: String,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate_entry(entry: &CorpusEntry, parsed_functions: &BTreeSet<String>) -> ValidationReport {
    let mut issues: Vec<ValidationIssue> = entry
        .knowledge_map
        .keys()
        .filter(|k| !parsed_functions.contains(*k))
        .map(|k| ValidationIssue::UnknownKnowledgeTarget(k.clone()))
        .collect();
    for (index, d) in entry.io_spec.inputs.iter().enumerate() {
        if d.normalized_label().is_empty() {
            issues.push(ValidationIssue::EmptyInputLabel {
                index,
                raw: d.label.clone(),
            });
        }
    }
    for (index, d) in entry.io_spec.outputs.iter().enumerate() {
        if d.normalized_label().is_empty() {
            issues.push(ValidationIssue::EmptyOutputLabel {
                index,
                raw: d.label.clone(),
            });
        }
    }
    ValidationReport {
        entry_id: entry.entry_id.clone(),
        issues,
    }
}
