//! Scoring retrieved node sets against gold annotations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DependencyGraph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no result for question {0:?}")]
    MissingResult(String),
    #[error("gold file has no questions")]
    EmptyGold,
    #[error("gold question {question:?}: `{name}` is both needed and unneeded")]
    Overlap { question: String, name: String },
    #[error("gold question {question:?}: `{name}` is not a function in the graph")]
    UnknownFunction { question: String, name: String },
    #[error("cannot read gold file {path}: {message}")]
    GoldFile { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldAnnotation {
    pub question: String,
    pub needed: BTreeSet<String>,
    #[serde(default)]
    pub unneeded: BTreeSet<String>,
}

/// Gold file: a JSON array of annotations.
pub fn parse_gold(text: &str) -> Result<Vec<GoldAnnotation>, EvalError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let gold: Vec<GoldAnnotation> = serde_path_to_error::deserialize(de).map_err(|e| EvalError::GoldFile {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    for g in &gold {
        if let Some(name) = g.needed.intersection(&g.unneeded).next() {
            return Err(EvalError::Overlap {
                question: g.question.clone(),
                name: name.clone(),
            });
        }
    }
    Ok(gold)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldAnnotation>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::GoldFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_gold(&text)
}

/// Every gold name must be a function of `graph`.
pub fn check_gold_against(gold: &[GoldAnnotation], graph: &DependencyGraph) -> Result<(), EvalError> {
    for g in gold {
        for name in g.needed.iter().chain(&g.unneeded) {
            if graph.kc_by_name(name).is_none() {
                return Err(EvalError::UnknownFunction {
                    question: g.question.clone(),
                    name: name.clone(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Retrieved knowledge-code nodes; I/O nodes are never part of a result.
    pub retrieved_kc_count: usize,
}

/// Precision and recall over function-name sets. An empty retrieval has
/// precision 1 when nothing was needed and 0 otherwise; recall is 1 when
/// nothing was needed.
pub fn score(retrieved: &BTreeSet<String>, needed: &BTreeSet<String>) -> RetrievalScore {
    let hits = retrieved.intersection(needed).count() as f64;
    let precision = if retrieved.is_empty() {
        if needed.is_empty() { 1.0 } else { 0.0 }
    } else {
        hits / retrieved.len() as f64
    };
    let recall = if needed.is_empty() { 1.0 } else { hits / needed.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RetrievalScore {
        precision,
        recall,
        f1,
        retrieved_kc_count: retrieved.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question: String,
    pub retrieved: BTreeSet<String>,
    pub score: RetrievalScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean retrieved knowledge-code nodes per question.
    pub avg_nodes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub method: String,
    pub per_question: Vec<QuestionScore>,
    pub aggregate: Aggregate,
}

/// Scores one method. `results` maps question text to retrieved names.
pub fn evaluate(
    method: &str,
    results: &BTreeMap<String, BTreeSet<String>>,
    gold: &[GoldAnnotation],
) -> Result<Evaluation, EvalError> {
    let mut per_question = Vec::with_capacity(gold.len());
    for g in gold {
        let retrieved = results
            .get(&g.question)
            .ok_or_else(|| EvalError::MissingResult(g.question.clone()))?;
        per_question.push(QuestionScore {
            question: g.question.clone(),
            retrieved: retrieved.clone(),
            score: score(retrieved, &g.needed),
        });
    }
    let n = per_question.len().max(1) as f64;
    let mean = |f: fn(&RetrievalScore) -> f64| per_question.iter().map(|q| f(&q.score)).sum::<f64>() / n;
    let aggregate = Aggregate {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        avg_nodes: mean(|s| s.retrieved_kc_count as f64),
    };
    Ok(Evaluation {
        method: method.to_owned(),
        per_question,
        aggregate,
    })
}

/// Aligned plain-text table, one row per method.
pub fn render_table(evaluations: &[Evaluation]) -> String {
    let width = evaluations.iter().map(|e| e.method.len()).max().unwrap_or(0).max("method".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}",
        "method", "precision", "recall", "f1", "avg_nodes"
    );
    for e in evaluations {
        let a = &e.aggregate;
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.2}",
            e.method, a.precision, a.recall, a.f1, a.avg_nodes
        );
    }
    out
}
