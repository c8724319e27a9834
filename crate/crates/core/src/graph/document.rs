//! Canonical JSON graph documents and DOT export.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DependencyGraph, Edge, EdgeKind, GraphError, IoKind, IoNode, KnowledgeCodeNode, NodeId};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct DocumentOut<'a> {
    format_version: u32,
    kc_nodes: Vec<&'a KnowledgeCodeNode>,
    io_nodes: Vec<&'a IoNode>,
    edges: Vec<&'a Edge>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    #[allow(dead_code)]
    format_version: serde_json::Value,
    kc_nodes: Vec<KnowledgeCodeNode>,
    io_nodes: Vec<IoNode>,
    edges: Vec<Edge>,
}

/// Pretty-printed JSON with nodes sorted by id and edges by
/// (src, dst, type). Equal graphs give byte-identical documents.
pub fn serialize(graph: &DependencyGraph) -> String {
    let mut kc_nodes: Vec<_> = graph.kc_nodes.iter().collect();
    kc_nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
    let mut io_nodes: Vec<_> = graph.io_nodes.iter().collect();
    io_nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
    let doc = DocumentOut {
        format_version: FORMAT_VERSION,
        kc_nodes,
        io_nodes,
        edges: graph.edges.iter().collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("graph serializes");
    out.push('\n');
    out
}

pub fn deserialize(document: &str) -> Result<DependencyGraph, GraphError> {
    let value: serde_json::Value = serde_json::from_str(document).map_err(|e| schema("", e))?;
    match value.get("format_version") {
        Some(v) if v.as_u64() == Some(u64::from(FORMAT_VERSION)) => {}
        Some(v) => {
            return Err(GraphError::FormatVersionMismatch {
                found: v.to_string(),
                expected: FORMAT_VERSION,
            })
        }
        None => {
            return Err(GraphError::SchemaViolation {
                path: "format_version".into(),
                message: "missing field".into(),
            })
        }
    }
    let doc: DocumentIn = serde_path_to_error::deserialize(value).map_err(|e| {
        GraphError::SchemaViolation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        }
    })?;

    let mut kinds: HashMap<&NodeId, Option<IoKind>> = HashMap::new();
    for (i, n) in doc.kc_nodes.iter().enumerate() {
        if kinds.insert(&n.node_id, None).is_some() {
            return Err(violation(format!("kc_nodes[{i}].node_id"), format!("duplicate id `{}`", n.node_id)));
        }
    }
    for (i, n) in doc.io_nodes.iter().enumerate() {
        if kinds.insert(&n.node_id, Some(n.kind)).is_some() {
            return Err(violation(format!("io_nodes[{i}].node_id"), format!("duplicate id `{}`", n.node_id)));
        }
    }
    let mut edges = BTreeSet::new();
    for (i, e) in doc.edges.iter().enumerate() {
        let (Some(src), Some(dst)) = (kinds.get(&e.src), kinds.get(&e.dst)) else {
            return Err(violation(format!("edges[{i}]"), "edge endpoint does not exist".into()));
        };
        let ok = match e.kind {
            EdgeKind::Call => src.is_none() && dst.is_none(),
            EdgeKind::Feeds => *src == Some(IoKind::Input) && dst.is_none(),
            EdgeKind::Yields => src.is_none() && *dst == Some(IoKind::Output),
        };
        if !ok {
            return Err(violation(format!("edges[{i}]"), format!("{} edge connects the wrong node kinds", e.kind)));
        }
        if !edges.insert(e.clone()) {
            return Err(violation(format!("edges[{i}]"), "duplicate edge".into()));
        }
    }

    let mut graph = DependencyGraph {
        kc_nodes: doc.kc_nodes,
        io_nodes: doc.io_nodes,
        edges,
    };
    graph.sort_nodes();
    Ok(graph)
}

fn schema(path: &str, e: serde_json::Error) -> GraphError {
    violation(path.to_owned(), e.to_string())
}

fn violation(path: String, message: String) -> GraphError {
    GraphError::SchemaViolation { path, message }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz DOT text: functions as boxes, inputs and outputs as ellipses,
/// edge type as a `type` attribute.
pub fn to_dot(graph: &DependencyGraph) -> String {
    let mut out = String::from("digraph sgkr {\n    rankdir=LR;\n");
    let mut kc: Vec<_> = graph.kc_nodes.iter().collect();
    kc.sort_by(|a, b| a.node_id.cmp(&b.node_id));
    for n in kc {
        let _ = writeln!(out, "    {} [label={}, shape=box];", quote(n.node_id.as_str()), quote(&n.function_name));
    }
    let mut io: Vec<_> = graph.io_nodes.iter().collect();
    io.sort_by(|a, b| a.node_id.cmp(&b.node_id));
    for n in io {
        let _ = writeln!(
            out,
            "    {} [label={}, shape=ellipse, kind={}];",
            quote(n.node_id.as_str()),
            quote(&n.label),
            n.kind
        );
    }
    for e in &graph.edges {
        let _ = writeln!(out, "    {} -> {} [type={}];", quote(e.src.as_str()), quote(e.dst.as_str()), e.kind);
    }
    out.push_str("}\n");
    out
}
