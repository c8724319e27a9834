//! Similarity baselines that rank knowledge-code nodes against a question.
//!
//! * [`LexicalIndex`]: Okapi BM25 over function-name, knowledge and code
//!   identifier tokens.
//! * [`VectorIndex`]: cosine similarity over precomputed embeddings.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DependencyGraph, KnowledgeCodeNode};
use crate::parser::is_keyword;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("vector for `{name}` has dimension {found}, expected {expected}")]
    VectorDimensionMismatch {
        name: String,
        found: usize,
        expected: usize,
    },
    #[error("no vector for {0}")]
    MissingVector(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("cannot read vector file {path}: {message}")]
    VectorFile { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Lowercase alphanumeric runs; `_` separates, so `rule_applies` gives
/// `rule` and `applies`.
pub fn text_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Identifier tokens of source code, keywords excluded, split like
/// [`text_tokens`].
pub fn code_tokens(code: &str) -> Vec<String> {
    code.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| w.starts_with(|c: char| c.is_alphabetic() || c == '_') && !is_keyword(w))
        .flat_map(text_tokens)
        .collect()
}

/// The bag of words a node is scored on.
pub fn node_terms(node: &KnowledgeCodeNode) -> Vec<String> {
    let mut terms = text_tokens(&node.function_name);
    terms.extend(text_tokens(&node.knowledge));
    terms.extend(code_tokens(&node.code));
    terms
}

#[derive(Debug, Clone)]
struct Doc {
    name: String,
    len: usize,
    tf: HashMap<String, usize>,
}

/// Corpus statistics over every knowledge-code node of a graph.
#[derive(Debug, Clone)]
pub struct LexicalIndex {
    params: Bm25Params,
    docs: Vec<Doc>,
    df: HashMap<String, usize>,
    avg_len: f64,
}

impl LexicalIndex {
    pub fn new(graph: &DependencyGraph) -> Self {
        Self::with_params(graph, Bm25Params::default())
    }

    pub fn with_params(graph: &DependencyGraph, params: Bm25Params) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let docs: Vec<Doc> = graph
            .kc_nodes
            .iter()
            .map(|n| {
                let terms = node_terms(n);
                let mut tf: HashMap<String, usize> = HashMap::new();
                for t in &terms {
                    *tf.entry(t.clone()).or_default() += 1;
                }
                for t in tf.keys() {
                    *df.entry(t.clone()).or_default() += 1;
                }
                Doc {
                    name: n.function_name.clone(),
                    len: terms.len(),
                    tf,
                }
            })
            .collect();
        let total: usize = docs.iter().map(|d| d.len).sum();
        let avg_len = if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 };
        Self {
            params,
            docs,
            df,
            avg_len,
        }
    }

    /// `ln(1 + (N - n + 0.5) / (n + 0.5))`, never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.df.get(term).copied().unwrap_or(0) as f64;
        let total = self.docs.len() as f64;
        (1.0 + (total - n + 0.5) / (n + 0.5)).ln()
    }

    fn score_doc(&self, query_terms: &HashSet<String>, doc: &Doc) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let norm = if self.avg_len > 0.0 { doc.len as f64 / self.avg_len } else { 0.0 };
        query_terms
            .iter()
            .filter_map(|t| doc.tf.get(t).map(|&f| (t, f as f64)))
            .map(|(t, f)| self.idf(t) * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * norm)))
            .sum()
    }

    /// BM25 score of the node named `function_name`; 0 for unknown names or
    /// no shared terms. Repeated query terms count once.
    pub fn score(&self, question: &str, function_name: &str) -> f64 {
        let q: HashSet<String> = text_tokens(question).into_iter().collect();
        self.docs
            .iter()
            .find(|d| d.name == function_name)
            .map_or(0.0, |d| self.score_doc(&q, d))
    }

    pub fn scores(&self, question: &str) -> Vec<(String, f64)> {
        let q: HashSet<String> = text_tokens(question).into_iter().collect();
        self.docs.iter().map(|d| (d.name.clone(), self.score_doc(&q, d))).collect()
    }
}

/// Score of `node` under statistics gathered from `graph`.
pub fn lexical_score(question: &str, node: &KnowledgeCodeNode, graph: &DependencyGraph) -> f64 {
    LexicalIndex::new(graph).score(question, &node.function_name)
}

/// Vector file: `{"dimension": d, "nodes": {name: [..]}, "queries": {question: [..]}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorFile {
    pub dimension: usize,
    pub nodes: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub queries: BTreeMap<String, Vec<f64>>,
}

impl VectorFile {
    pub fn parse(text: &str) -> Result<Self, BaselineError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| BaselineError::VectorFile {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let text = std::fs::read_to_string(path).map_err(|e| BaselineError::VectorFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

/// Node embeddings checked against a graph.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    file: VectorFile,
    names: Vec<String>,
}

impl VectorIndex {
    pub fn new(graph: &DependencyGraph, file: VectorFile) -> Result<Self, BaselineError> {
        let mut names = Vec::with_capacity(graph.kc_nodes.len());
        for n in &graph.kc_nodes {
            let v = file
                .nodes
                .get(&n.function_name)
                .ok_or_else(|| BaselineError::MissingVector(format!("node `{}`", n.function_name)))?;
            check_dim(&n.function_name, v, file.dimension)?;
            names.push(n.function_name.clone());
        }
        for (q, v) in &file.queries {
            check_dim(q, v, file.dimension)?;
        }
        Ok(Self { file, names })
    }

    pub fn scores(&self, question: &str) -> Result<Vec<(String, f64)>, BaselineError> {
        let q = self
            .file
            .queries
            .get(question)
            .ok_or_else(|| BaselineError::MissingVector(format!("question {question:?}")))?;
        Ok(self
            .names
            .iter()
            .map(|n| (n.clone(), cosine(q, &self.file.nodes[n])))
            .collect())
    }
}

fn check_dim(name: &str, v: &[f64], expected: usize) -> Result<(), BaselineError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(BaselineError::VectorDimensionMismatch {
            name: name.to_owned(),
            found: v.len(),
            expected,
        })
    }
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub enum Scorer<'a> {
    Lexical(&'a LexicalIndex),
    Vectors(&'a VectorIndex),
}

/// The `k` best nodes, highest score first, ties broken by function name.
pub fn retrieve_topk(question: &str, k: usize, scorer: &Scorer<'_>) -> Result<Vec<(String, f64)>, BaselineError> {
    if k == 0 {
        return Err(BaselineError::InvalidK);
    }
    let mut scored = match scorer {
        Scorer::Lexical(index) => index.scores(question),
        Scorer::Vectors(index) => index.scores(question)?,
    };
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}
