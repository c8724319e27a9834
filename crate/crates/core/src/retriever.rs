//! Dependency-path retrieval between semantic input and output nodes.
//!
//! Paths start at an input I/O node, pass through knowledge-code nodes and
//! end at an output I/O node. `FEEDS` and `YIELDS` edges are followed only
//! in their stored direction. `CALL` edges are followed both ways: the
//! stored direction points caller → callee while data flows from callee
//! back to caller, so an input consumed by a callee reaches an output
//! returned by its caller only through a reversed `CALL` step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DependencyGraph, Edge, EdgeKind, IoKind, NodeId, NodeRef};
use crate::tagger::TagSet;

pub const DEFAULT_MAX_DEPTH: usize = 16;
pub const DEFAULT_MAX_PATHS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RetrievalError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("node `{id}` is not an {expected} I/O node")]
    WrongEndpoint { id: NodeId, expected: IoKind },
    #[error("retrieval limits must be positive")]
    InvalidLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum number of edges in a path.
    pub max_depth: usize,
    pub max_paths: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub edge: Edge,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DependencyPath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<PathStep>,
}

impl DependencyPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalStats {
    pub nodes_expanded: usize,
    pub paths_found: usize,
    /// Some partial path could have continued past `max_depth`.
    pub depth_truncated: bool,
    /// More paths existed than `max_paths`.
    pub paths_truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub paths: Vec<DependencyPath>,
    pub subgraph_nodes: BTreeSet<NodeId>,
    pub fallback: bool,
    pub stats: RetrievalStats,
}

impl RetrievalResult {
    pub fn fallback() -> Self {
        Self {
            fallback: true,
            ..Self::default()
        }
    }

    /// Knowledge-code nodes of the subgraph; I/O nodes never count.
    pub fn kc_nodes<'g>(&self, graph: &'g DependencyGraph) -> Vec<&'g crate::graph::KnowledgeCodeNode> {
        self.subgraph_nodes.iter().filter_map(|id| graph.kc_node(id)).collect()
    }

    pub fn kc_count(&self, graph: &DependencyGraph) -> usize {
        self.kc_nodes(graph).len()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Kc,
    Input,
    Output,
}

/// Traversal view of a graph: for each node, the steps leaving it, sorted by
/// destination id, at most one per destination.
struct Neighbours<'g> {
    kinds: BTreeMap<&'g NodeId, Kind>,
    steps: BTreeMap<&'g NodeId, Vec<(&'g NodeId, &'g Edge, Orientation)>>,
}

impl<'g> Neighbours<'g> {
    fn new(graph: &'g DependencyGraph) -> Self {
        let mut kinds = BTreeMap::new();
        for n in &graph.kc_nodes {
            kinds.insert(&n.node_id, Kind::Kc);
        }
        for n in &graph.io_nodes {
            let k = match n.kind {
                IoKind::Input => Kind::Input,
                IoKind::Output => Kind::Output,
            };
            kinds.insert(&n.node_id, k);
        }
        let mut steps: BTreeMap<&NodeId, Vec<_>> = BTreeMap::new();
        for e in &graph.edges {
            steps.entry(&e.src).or_default().push((&e.dst, e, Orientation::Forward));
            if e.kind == EdgeKind::Call {
                steps.entry(&e.dst).or_default().push((&e.src, e, Orientation::Reverse));
            }
        }
        for v in steps.values_mut() {
            v.sort_by(|a, b| a.0.cmp(b.0).then(a.2.cmp(&b.2)).then(a.1.cmp(b.1)));
            // One step per neighbour: a forward edge wins over a reversed one.
            v.dedup_by(|later, first| later.0 == first.0);
        }
        Self { kinds, steps }
    }
}

fn check_endpoint(graph: &DependencyGraph, id: &NodeId, expected: IoKind) -> Result<(), RetrievalError> {
    match graph.node(id) {
        None => Err(RetrievalError::UnknownNode(id.clone())),
        Some(NodeRef::Io(n)) if n.kind == expected => Ok(()),
        Some(_) => Err(RetrievalError::WrongEndpoint {
            id: id.clone(),
            expected,
        }),
    }
}

/// All simple source → target paths of at most `limits.max_depth` edges, in
/// breadth-first order: by length, then lexicographically by node ids.
/// At most `limits.max_paths` are returned.
pub fn find_paths(
    graph: &DependencyGraph,
    sources: &[NodeId],
    targets: &[NodeId],
    limits: Limits,
) -> Result<(Vec<DependencyPath>, RetrievalStats), RetrievalError> {
    if limits.max_depth == 0 || limits.max_paths == 0 {
        return Err(RetrievalError::InvalidLimits);
    }
    for s in sources {
        check_endpoint(graph, s, IoKind::Input)?;
    }
    for t in targets {
        check_endpoint(graph, t, IoKind::Output)?;
    }
    let targets: BTreeSet<&NodeId> = targets.iter().collect();
    let sources: BTreeSet<&NodeId> = sources.iter().collect();
    let view = Neighbours::new(graph);

    let mut stats = RetrievalStats::default();
    let mut found = Vec::new();

    struct Partial<'g> {
        nodes: Vec<&'g NodeId>,
        steps: Vec<(&'g Edge, Orientation)>,
    }

    // Sorted sources and sorted expansion keep each level in lexicographic
    // order, so appending completions level by level yields the final order.
    let mut queue: VecDeque<Partial> = sources
        .iter()
        .map(|s| Partial {
            nodes: vec![*s],
            steps: vec![],
        })
        .collect();

    'bfs: while let Some(p) = queue.pop_front() {
        let last = *p.nodes.last().expect("non-empty");
        stats.nodes_expanded += 1;
        let Some(next_steps) = view.steps.get(last) else {
            continue;
        };
        for (next, edge, orientation) in next_steps {
            if p.nodes.contains(next) {
                continue;
            }
            let kind = view.kinds.get(*next).copied();
            let is_target = kind == Some(Kind::Output) && targets.contains(*next);
            if kind != Some(Kind::Kc) && !is_target {
                continue;
            }
            if p.steps.len() + 1 > limits.max_depth {
                stats.depth_truncated = true;
                continue;
            }
            let mut nodes = p.nodes.clone();
            nodes.push(next);
            let mut steps = p.steps.clone();
            steps.push((edge, *orientation));
            if is_target {
                if found.len() == limits.max_paths {
                    stats.paths_truncated = true;
                    break 'bfs;
                }
                found.push(DependencyPath {
                    nodes: nodes.into_iter().cloned().collect(),
                    edges: steps
                        .into_iter()
                        .map(|(e, o)| PathStep {
                            edge: e.clone(),
                            orientation: o,
                        })
                        .collect(),
                });
            } else {
                queue.push_back(Partial { nodes, steps });
            }
        }
    }
    stats.paths_found = found.len();
    Ok((found, stats))
}

/// Paths between the matched I/O nodes and the union of their nodes, or a
/// fallback result when the tag set lacks inputs or outputs.
pub fn retrieve(
    graph: &DependencyGraph,
    tags: &TagSet,
    limits: Limits,
) -> Result<RetrievalResult, RetrievalError> {
    if tags.fallback {
        return Ok(RetrievalResult::fallback());
    }
    let ids = |labels: &BTreeSet<String>, kind| -> Vec<NodeId> {
        labels
            .iter()
            .filter_map(|l| graph.io_by_label(l, kind))
            .map(|n| n.node_id.clone())
            .collect()
    };
    let sources = ids(&tags.inputs, IoKind::Input);
    let targets = ids(&tags.outputs, IoKind::Output);
    if sources.is_empty() || targets.is_empty() {
        return Ok(RetrievalResult::fallback());
    }
    let (paths, stats) = find_paths(graph, &sources, &targets, limits)?;
    let subgraph_nodes = paths.iter().flat_map(|p| p.nodes.iter().cloned()).collect();
    Ok(RetrievalResult {
        paths,
        subgraph_nodes,
        fallback: false,
        stats,
    })
}
