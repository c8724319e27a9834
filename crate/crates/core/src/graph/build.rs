use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::{validate_entry, Corpus, IoSpec};
use crate::parser::{build_trace_fragment, FunctionDef, TraceFragment};

use super::{
    validate_graph, DependencyGraph, Edge, EdgeKind, GraphError, GraphReport, IoKind, IoNode,
    KnowledgeCodeNode, NodeId,
};

/// Knowledge text for a function nobody annotated.
pub(crate) fn placeholder_knowledge(function: &FunctionDef) -> String {
    let first = function
        .body_text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    format!("function {}: {}", function.name, first)
}

/// One node per (entry, definition) with knowledge attached, and CALL edges.
///
/// A call resolves to the same entry's definition when there is one, and
/// otherwise to the first definition of that name anywhere in the corpus.
/// Calls to names the corpus never defines are dropped.
pub fn assemble_raw_graph(
    fragments: &[TraceFragment],
    corpus: &Corpus,
) -> Result<DependencyGraph, GraphError> {
    let entries: HashMap<&str, _> = corpus
        .entries
        .iter()
        .map(|e| (e.entry_id.as_str(), e))
        .collect();

    let mut graph = DependencyGraph::default();
    // Node ids of each fragment's definitions, parallel to `functions`.
    let mut fragment_ids: Vec<Vec<NodeId>> = Vec::with_capacity(fragments.len());
    let mut first_anywhere: HashMap<&str, NodeId> = HashMap::new();

    for frag in fragments {
        let entry = entries
            .get(frag.entry_id.as_str())
            .ok_or_else(|| GraphError::UnknownEntry(frag.entry_id.clone()))?;
        let defined: BTreeSet<&str> = frag.functions.iter().map(|f| f.name.as_str()).collect();
        if let Some(missing) = entry.knowledge_map.keys().find(|k| !defined.contains(k.as_str())) {
            return Err(GraphError::KnowledgeBinding {
                entry: frag.entry_id.clone(),
                function: missing.clone(),
            });
        }

        let mut seen: HashMap<&str, usize> = HashMap::new();
        let mut ids = Vec::with_capacity(frag.functions.len());
        for f in &frag.functions {
            let ordinal = seen.entry(f.name.as_str()).or_insert(0);
            let id = NodeId::for_function(&frag.entry_id, &f.name, *ordinal);
            *ordinal += 1;
            let knowledge = match entry.knowledge_map.get(&f.name) {
                Some(k) if !k.trim().is_empty() => k.clone(),
                _ => placeholder_knowledge(f),
            };
            first_anywhere.entry(f.name.as_str()).or_insert_with(|| id.clone());
            graph.kc_nodes.push(KnowledgeCodeNode {
                node_id: id.clone(),
                function_name: f.name.clone(),
                code: f.code.clone(),
                knowledge,
                origin_entries: vec![frag.entry_id.clone()],
                variants: Vec::new(),
            });
            ids.push(id);
        }
        fragment_ids.push(ids);
    }

    for (frag, ids) in fragments.iter().zip(&fragment_ids) {
        let mut local: HashMap<&str, &NodeId> = HashMap::new();
        for (f, id) in frag.functions.iter().zip(ids) {
            local.entry(f.name.as_str()).or_insert(id);
        }
        for (f, caller) in frag.functions.iter().zip(ids) {
            for callee in &f.calls {
                let target = local
                    .get(callee.as_str())
                    .copied()
                    .or_else(|| first_anywhere.get(callee.as_str()));
                if let Some(target) = target {
                    graph.edges.insert(Edge::call(caller, target));
                }
            }
        }
    }
    Ok(graph)
}

/// Collapses knowledge-code nodes sharing a function name onto the first of
/// them, redirecting every edge and dropping duplicate edges.
///
/// The canonical node keeps its own code and knowledge. Knowledge texts of
/// the folded nodes that differ from everything already kept are appended in
/// order; differing code bodies are recorded as variants.
pub fn merge_identical(graph: &DependencyGraph) -> DependencyGraph {
    let mut canonical_of: HashMap<&NodeId, usize> = HashMap::new();
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    let mut merged: Vec<KnowledgeCodeNode> = Vec::new();
    let mut knowledge_parts: Vec<Vec<String>> = Vec::new();

    for node in &graph.kc_nodes {
        match by_name.get(node.function_name.as_str()) {
            None => {
                let idx = merged.len();
                by_name.insert(&node.function_name, idx);
                canonical_of.insert(&node.node_id, idx);
                merged.push(node.clone());
                knowledge_parts.push(vec![node.knowledge.clone()]);
            }
            Some(&idx) => {
                canonical_of.insert(&node.node_id, idx);
                let canon = &mut merged[idx];
                for origin in &node.origin_entries {
                    if !canon.origin_entries.contains(origin) {
                        canon.origin_entries.push(origin.clone());
                    }
                }
                if node.code != canon.code && !canon.variants.contains(&node.code) {
                    canon.variants.push(node.code.clone());
                }
                for v in &node.variants {
                    if *v != canon.code && !canon.variants.contains(v) {
                        canon.variants.push(v.clone());
                    }
                }
                let parts = &mut knowledge_parts[idx];
                if !parts.contains(&node.knowledge) {
                    parts.push(node.knowledge.clone());
                }
            }
        }
    }
    for (node, parts) in merged.iter_mut().zip(knowledge_parts) {
        if parts.len() > 1 {
            node.knowledge = parts.join("\n\n");
        }
    }

    let relabel = |id: &NodeId| -> NodeId {
        canonical_of
            .get(id)
            .map_or_else(|| id.clone(), |&i| merged[i].node_id.clone())
    };
    let edges = graph
        .edges
        .iter()
        .map(|e| Edge::new(relabel(&e.src), relabel(&e.dst), e.kind))
        .collect();

    let mut out = DependencyGraph {
        kc_nodes: merged,
        io_nodes: graph.io_nodes.clone(),
        edges,
    };
    out.sort_nodes();
    out
}

/// Adds one I/O node per distinct (label, kind) and attaches it to its
/// anchor functions: `FEEDS` input → anchor, `YIELDS` anchor → output.
///
/// An anchor resolves to the node of that name originating in the declaring
/// entry, else to the first node of that name. After merging names are
/// unique and both rules agree; on an unmerged graph each entry's I/O stays
/// attached to its own trace.
pub fn insert_io_nodes(
    graph: &DependencyGraph,
    io_specs: &[(String, IoSpec)],
) -> Result<DependencyGraph, GraphError> {
    let mut by_name: HashMap<&str, &NodeId> = HashMap::new();
    let mut by_entry_name: HashMap<(&str, &str), &NodeId> = HashMap::new();
    for n in &graph.kc_nodes {
        by_name.entry(n.function_name.as_str()).or_insert(&n.node_id);
        for origin in &n.origin_entries {
            by_entry_name
                .entry((origin.as_str(), n.function_name.as_str()))
                .or_insert(&n.node_id);
        }
    }
    let mut out = graph.clone();
    let mut io: BTreeMap<NodeId, IoNode> = out
        .io_nodes
        .drain(..)
        .map(|n| (n.node_id.clone(), n))
        .collect();

    for (entry, spec) in io_specs {
        let decls = spec
            .inputs
            .iter()
            .map(|d| (IoKind::Input, d))
            .chain(spec.outputs.iter().map(|d| (IoKind::Output, d)));
        for (kind, decl) in decls {
            let label = decl.normalized_label();
            if label.is_empty() {
                return Err(GraphError::EmptyLabel {
                    entry: entry.clone(),
                    kind,
                    raw: decl.label.clone(),
                });
            }
            let anchor = by_entry_name
                .get(&(entry.as_str(), decl.anchor.as_str()))
                .or_else(|| by_name.get(decl.anchor.as_str()))
                .ok_or_else(|| GraphError::AnchorNotFound {
                    entry: entry.clone(),
                    label: label.clone(),
                    kind,
                    anchor: decl.anchor.clone(),
                })?;
            let id = NodeId::for_io(kind, &label);
            io.entry(id.clone()).or_insert_with(|| IoNode {
                node_id: id.clone(),
                label,
                kind,
            });
            let edge = match kind {
                IoKind::Input => Edge::new(id, (*anchor).clone(), EdgeKind::Feeds),
                IoKind::Output => Edge::new((*anchor).clone(), id, EdgeKind::Yields),
            };
            out.edges.insert(edge);
        }
    }
    out.io_nodes = io.into_values().collect();
    out.sort_nodes();
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub entries: usize,
    pub raw_kc_nodes: usize,
    /// Nodes folded into a canonical node during merging.
    pub merged_duplicates: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub graph: DependencyGraph,
    pub report: GraphReport,
    pub stats: BuildStats,
}

/// Parse, bind knowledge, merge, insert I/O nodes and validate.
///
/// CALL cycles are reported in `report` but do not fail the build; any other
/// invariant violation does.
pub fn build_graph(corpus: &Corpus) -> Result<BuildOutput, GraphError> {
    let mut fragments = Vec::with_capacity(corpus.entries.len());
    for entry in &corpus.entries {
        let frag = build_trace_fragment(entry).map_err(|error| GraphError::Parse {
            entry: entry.entry_id.clone(),
            error,
        })?;
        let names: BTreeSet<String> = frag.functions.iter().map(|f| f.name.clone()).collect();
        let report = validate_entry(entry, &names);
        if !report.is_valid() {
            return Err(GraphError::InvalidEntry(report));
        }
        fragments.push(frag);
    }
    let raw = assemble_raw_graph(&fragments, corpus)?;
    let merged = merge_identical(&raw);
    let io_specs: Vec<(String, IoSpec)> = fragments
        .iter()
        .map(|f| (f.entry_id.clone(), f.io_spec.clone()))
        .collect();
    let graph = insert_io_nodes(&merged, &io_specs)?;
    let report = validate_graph(&graph);
    if !report.violations.is_empty() {
        return Err(GraphError::Invariant(report.violations));
    }
    let stats = BuildStats {
        entries: corpus.entries.len(),
        raw_kc_nodes: raw.kc_nodes.len(),
        merged_duplicates: raw.kc_nodes.len() - merged.kc_nodes.len(),
    };
    Ok(BuildOutput { graph, report, stats })
}
