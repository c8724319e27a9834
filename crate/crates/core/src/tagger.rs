//! Semantic I/O tag extraction by keyword matching.
//!
//! The vocabulary is the set of I/O node labels in a graph, optionally
//! extended with aliases. A label (or alias) matches when its tokens occur
//! contiguously in the normalized question. Longer phrases claim their
//! tokens first; a span claimed by a longer phrase is not available to
//! shorter phrases of the same kind. Input and output matching claim
//! spans independently, so "most expensive mcc" as an output does not hide
//! "mcc" as an input.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DependencyGraph, IoKind};
use crate::normalize::{label_tokens, normalize_label};

#[derive(Debug, Error)]
pub enum TagError {
    #[error("alias `{alias}` maps to both `{first}` and `{second}` ({kind})")]
    AliasCollision {
        alias: String,
        kind: IoKind,
        first: String,
        second: String,
    },
    #[error("alias `{alias}` targets unknown {kind} label `{label}`")]
    UnknownAliasTarget { alias: String, label: String, kind: IoKind },
    #[error("alias `{0}` is empty after normalization")]
    EmptyAlias(String),
    #[error("cannot read alias file {path}: {message}")]
    AliasFile { path: String, message: String },
}

/// One record of an alias file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliasRecord {
    pub alias: String,
    pub label: String,
    pub kind: IoKind,
}

/// Alias file: `{"aliases": [{"alias": "...", "label": "...", "kind": "input"}]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliasFile {
    pub aliases: Vec<AliasRecord>,
}

impl AliasFile {
    pub fn parse(text: &str) -> Result<Self, TagError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| TagError::AliasFile {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, TagError> {
        let text = std::fs::read_to_string(path).map_err(|e| TagError::AliasFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagVocabulary {
    /// Normalized label → normalized aliases (the label itself excluded).
    pub input_labels: BTreeMap<String, BTreeSet<String>>,
    pub output_labels: BTreeMap<String, BTreeSet<String>>,
}

impl TagVocabulary {
    pub fn labels(&self, kind: IoKind) -> &BTreeMap<String, BTreeSet<String>> {
        match kind {
            IoKind::Input => &self.input_labels,
            IoKind::Output => &self.output_labels,
        }
    }

    fn labels_mut(&mut self, kind: IoKind) -> &mut BTreeMap<String, BTreeSet<String>> {
        match kind {
            IoKind::Input => &mut self.input_labels,
            IoKind::Output => &mut self.output_labels,
        }
    }

    /// Every (phrase, label) pair of one kind, phrases tokenized.
    fn phrases(&self, kind: IoKind) -> Vec<(Vec<String>, &str)> {
        let mut out = Vec::new();
        for (label, aliases) in self.labels(kind) {
            out.push((label_tokens(label), label.as_str()));
            for alias in aliases {
                out.push((label_tokens(alias), label.as_str()));
            }
        }
        out
    }
}

pub fn build_vocabulary(
    graph: &DependencyGraph,
    aliases: Option<&AliasFile>,
) -> Result<TagVocabulary, TagError> {
    let mut vocab = TagVocabulary::default();
    for n in &graph.io_nodes {
        vocab.labels_mut(n.kind).entry(n.label.clone()).or_default();
    }
    let Some(aliases) = aliases else {
        return Ok(vocab);
    };

    // Phrase → owning label, per kind, seeded with the labels themselves.
    let mut owner: BTreeMap<(IoKind, String), String> = vocab
        .input_labels
        .keys()
        .map(|l| ((IoKind::Input, l.clone()), l.clone()))
        .chain(vocab.output_labels.keys().map(|l| ((IoKind::Output, l.clone()), l.clone())))
        .collect();

    for rec in &aliases.aliases {
        let alias = normalize_label(&rec.alias);
        if alias.is_empty() {
            return Err(TagError::EmptyAlias(rec.alias.clone()));
        }
        let label = normalize_label(&rec.label);
        if !vocab.labels(rec.kind).contains_key(&label) {
            return Err(TagError::UnknownAliasTarget {
                alias,
                label,
                kind: rec.kind,
            });
        }
        match owner.get(&(rec.kind, alias.clone())) {
            Some(existing) if *existing != label => {
                return Err(TagError::AliasCollision {
                    alias,
                    kind: rec.kind,
                    first: existing.clone(),
                    second: label,
                })
            }
            Some(_) => {}
            None => {
                owner.insert((rec.kind, alias.clone()), label.clone());
            }
        }
        if alias != label {
            vocab.labels_mut(rec.kind).get_mut(&label).expect("checked").insert(alias);
        }
    }
    Ok(vocab)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
    pub fallback: bool,
}

impl TagSet {
    pub fn new(inputs: BTreeSet<String>, outputs: BTreeSet<String>) -> Self {
        let fallback = inputs.is_empty() || outputs.is_empty();
        Self {
            inputs,
            outputs,
            fallback,
        }
    }
}

pub fn extract_tags(question: &str, vocab: &TagVocabulary) -> TagSet {
    let tokens = label_tokens(question);
    TagSet::new(
        match_kind(&tokens, vocab, IoKind::Input),
        match_kind(&tokens, vocab, IoKind::Output),
    )
}

fn match_kind(tokens: &[String], vocab: &TagVocabulary, kind: IoKind) -> BTreeSet<String> {
    // (length, start, label)
    let mut hits: Vec<(usize, usize, &str)> = Vec::new();
    for (phrase, label) in vocab.phrases(kind) {
        let n = phrase.len();
        if n == 0 || n > tokens.len() {
            continue;
        }
        for start in 0..=tokens.len() - n {
            if tokens[start..start + n] == phrase[..] {
                hits.push((n, start, label));
            }
        }
    }
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)));

    let mut claimed = vec![false; tokens.len()];
    let mut matched = BTreeSet::new();
    for (n, start, label) in hits {
        if claimed[start..start + n].iter().any(|c| *c) {
            continue;
        }
        claimed[start..start + n].iter_mut().for_each(|c| *c = true);
        matched.insert(label.to_owned());
    }
    matched
}
