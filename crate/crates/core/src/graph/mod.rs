//! The knowledge-code dependency graph.
//!
//! Nodes are either knowledge-code nodes (a function, its source and the
//! domain knowledge bound to it) or semantic I/O nodes (a normalized label
//! naming something a question takes as input or asks for as output).
//! Edges are typed:
//!
//! * `CALL`: caller → callee, between knowledge-code nodes;
//! * `FEEDS`: input I/O node → the function consuming it;
//! * `YIELDS`: the function returning an output → output I/O node.

mod build;
mod document;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ValidationReport;
use crate::parser::ParseError;

pub use build::{assemble_raw_graph, build_graph, insert_io_nodes, merge_identical, BuildOutput, BuildStats};
pub use document::{deserialize, serialize, to_dot, FORMAT_VERSION};
pub use validate::{validate_graph, GraphReport, Violation};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("entry `{entry}`: {error}")]
    Parse { entry: String, error: ParseError },
    #[error("entry `{}` is invalid: {}", .0.entry_id, .0.issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidEntry(ValidationReport),
    #[error("entry `{entry}`: knowledge is bound to `{function}`, which the entry does not define")]
    KnowledgeBinding { entry: String, function: String },
    #[error("fragment for unknown entry `{0}`")]
    UnknownEntry(String),
    #[error("entry `{entry}`: {kind} `{label}` is anchored at `{anchor}`, which is not in the graph")]
    AnchorNotFound {
        entry: String,
        label: String,
        kind: IoKind,
        anchor: String,
    },
    #[error("entry `{entry}`: {kind} label {raw:?} is empty after normalization")]
    EmptyLabel { entry: String, kind: IoKind, raw: String },
    #[error("graph document format_version {found}, expected {expected}")]
    FormatVersionMismatch { found: String, expected: u32 },
    #[error("graph document schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("built graph violates invariants: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invariant(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn for_function(entry_id: &str, function: &str, ordinal: usize) -> Self {
        if ordinal == 0 {
            Self(format!("{entry_id}::{function}"))
        } else {
            Self(format!("{entry_id}::{function}#{}", ordinal + 1))
        }
    }

    pub(crate) fn for_io(kind: IoKind, label: &str) -> Self {
        Self(format!("{kind}::{label}"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeCodeNode {
    pub node_id: NodeId,
    pub function_name: String,
    pub code: String,
    pub knowledge: String,
    pub origin_entries: Vec<String>,
    /// Differing bodies of same-named functions folded into this node.
    #[serde(default)]
    pub variants: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IoKind {
    Input,
    Output,
}

impl fmt::Display for IoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IoKind::Input => "input",
            IoKind::Output => "output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoNode {
    pub node_id: NodeId,
    pub label: String,
    pub kind: IoKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EdgeKind {
    Call,
    Feeds,
    Yields,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Call => "CALL",
            EdgeKind::Feeds => "FEEDS",
            EdgeKind::Yields => "YIELDS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(rename = "type")]
    pub kind: EdgeKind,
}

impl Edge {
    pub fn new(src: impl Into<NodeId>, dst: impl Into<NodeId>, kind: EdgeKind) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            kind,
        }
    }

    pub fn call(src: &NodeId, dst: &NodeId) -> Self {
        Self::new(src.clone(), dst.clone(), EdgeKind::Call)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef<'a> {
    Kc(&'a KnowledgeCodeNode),
    Io(&'a IoNode),
}

/// The graph. `kc_nodes` order matters before merging: the first node with a
/// given function name becomes the canonical one. Every graph produced by
/// [`merge_identical`], [`insert_io_nodes`] or [`deserialize`] keeps nodes
/// sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub kc_nodes: Vec<KnowledgeCodeNode>,
    pub io_nodes: Vec<IoNode>,
    pub edges: BTreeSet<Edge>,
}

impl DependencyGraph {
    pub fn node(&self, id: &NodeId) -> Option<NodeRef<'_>> {
        self.kc_node(id)
            .map(NodeRef::Kc)
            .or_else(|| self.io_node(id).map(NodeRef::Io))
    }

    pub fn kc_node(&self, id: &NodeId) -> Option<&KnowledgeCodeNode> {
        self.kc_nodes.iter().find(|n| &n.node_id == id)
    }

    pub fn io_node(&self, id: &NodeId) -> Option<&IoNode> {
        self.io_nodes.iter().find(|n| &n.node_id == id)
    }

    pub fn kc_by_name(&self, function_name: &str) -> Option<&KnowledgeCodeNode> {
        self.kc_nodes.iter().find(|n| n.function_name == function_name)
    }

    pub fn io_by_label(&self, label: &str, kind: IoKind) -> Option<&IoNode> {
        self.io_nodes.iter().find(|n| n.kind == kind && n.label == label)
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Callee ids per caller over CALL edges.
    pub fn call_adjacency(&self) -> BTreeMap<&NodeId, Vec<&NodeId>> {
        let mut adj: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for e in self.edges_of_kind(EdgeKind::Call) {
            adj.entry(&e.src).or_default().push(&e.dst);
        }
        adj
    }

    pub fn is_empty(&self) -> bool {
        self.kc_nodes.is_empty() && self.io_nodes.is_empty()
    }

    pub(crate) fn sort_nodes(&mut self) {
        self.kc_nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
        self.io_nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
    }
}
