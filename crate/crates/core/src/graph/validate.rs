use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use super::{DependencyGraph, EdgeKind, IoKind, NodeId, NodeRef};

/// Upper bound on reported cycles; enumeration stops once it is reached.
pub const MAX_REPORTED_CYCLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNodeId(NodeId),
    DuplicateFunctionName(String),
    EmptyKnowledge(NodeId),
    EmptyLabel(NodeId),
    DuplicateIoLabel { label: String, kind: IoKind },
    DanglingEdge { src: NodeId, dst: NodeId, kind: EdgeKind },
    WrongEndpointKind { src: NodeId, dst: NodeId, kind: EdgeKind },
    UnattachedInput(NodeId),
    UnattachedOutput(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateNodeId(id) => write!(f, "duplicate node id `{id}`"),
            Self::DuplicateFunctionName(n) => write!(f, "function `{n}` has more than one node"),
            Self::EmptyKnowledge(id) => write!(f, "node `{id}` has empty knowledge"),
            Self::EmptyLabel(id) => write!(f, "I/O node `{id}` has an empty label"),
            Self::DuplicateIoLabel { label, kind } => write!(f, "{kind} label `{label}` appears twice"),
            Self::DanglingEdge { src, dst, kind } => {
                write!(f, "{kind} edge `{src}` -> `{dst}` has a missing endpoint")
            }
            Self::WrongEndpointKind { src, dst, kind } => {
                write!(f, "{kind} edge `{src}` -> `{dst}` connects the wrong node kinds")
            }
            Self::UnattachedInput(id) => write!(f, "input `{id}` feeds no function"),
            Self::UnattachedOutput(id) => write!(f, "output `{id}` is yielded by no function"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphReport {
    pub violations: Vec<Violation>,
    /// Elementary CALL cycles, each starting and ending at its smallest node id.
    pub cycles: Vec<Vec<NodeId>>,
    pub cycles_truncated: bool,
}

impl GraphReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.cycles.is_empty()
    }
}

pub fn validate_graph(graph: &DependencyGraph) -> GraphReport {
    let mut violations = Vec::new();

    let mut ids = HashSet::new();
    for id in graph
        .kc_nodes
        .iter()
        .map(|n| &n.node_id)
        .chain(graph.io_nodes.iter().map(|n| &n.node_id))
    {
        if !ids.insert(id) {
            violations.push(Violation::DuplicateNodeId(id.clone()));
        }
    }
    let mut names = HashSet::new();
    for n in &graph.kc_nodes {
        if !names.insert(n.function_name.as_str()) {
            violations.push(Violation::DuplicateFunctionName(n.function_name.clone()));
        }
        if n.knowledge.trim().is_empty() {
            violations.push(Violation::EmptyKnowledge(n.node_id.clone()));
        }
    }
    let mut labels = HashSet::new();
    for n in &graph.io_nodes {
        if n.label.is_empty() {
            violations.push(Violation::EmptyLabel(n.node_id.clone()));
        }
        if !labels.insert((n.label.as_str(), n.kind)) {
            violations.push(Violation::DuplicateIoLabel {
                label: n.label.clone(),
                kind: n.kind,
            });
        }
    }

    let mut fed = HashSet::new();
    let mut yielded = HashSet::new();
    for e in &graph.edges {
        let (Some(src), Some(dst)) = (graph.node(&e.src), graph.node(&e.dst)) else {
            violations.push(Violation::DanglingEdge {
                src: e.src.clone(),
                dst: e.dst.clone(),
                kind: e.kind,
            });
            continue;
        };
        let ok = match (e.kind, src, dst) {
            (EdgeKind::Call, NodeRef::Kc(_), NodeRef::Kc(_)) => true,
            (EdgeKind::Feeds, NodeRef::Io(i), NodeRef::Kc(_)) => i.kind == IoKind::Input,
            (EdgeKind::Yields, NodeRef::Kc(_), NodeRef::Io(o)) => o.kind == IoKind::Output,
            _ => false,
        };
        if !ok {
            violations.push(Violation::WrongEndpointKind {
                src: e.src.clone(),
                dst: e.dst.clone(),
                kind: e.kind,
            });
            continue;
        }
        match e.kind {
            EdgeKind::Feeds => {
                fed.insert(&e.src);
            }
            EdgeKind::Yields => {
                yielded.insert(&e.dst);
            }
            EdgeKind::Call => {}
        }
    }
    for n in &graph.io_nodes {
        match n.kind {
            IoKind::Input if !fed.contains(&n.node_id) => {
                violations.push(Violation::UnattachedInput(n.node_id.clone()))
            }
            IoKind::Output if !yielded.contains(&n.node_id) => {
                violations.push(Violation::UnattachedOutput(n.node_id.clone()))
            }
            _ => {}
        }
    }

    let (cycles, cycles_truncated) = call_cycles(graph, MAX_REPORTED_CYCLES);
    GraphReport {
        violations,
        cycles,
        cycles_truncated,
    }
}

/// Elementary cycles over CALL edges. Each cycle is rooted at its smallest
/// node id, so every cycle is found exactly once.
fn call_cycles(graph: &DependencyGraph, limit: usize) -> (Vec<Vec<NodeId>>, bool) {
    let mut adj: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
    for e in graph.edges_of_kind(EdgeKind::Call) {
        adj.entry(&e.src).or_default().insert(&e.dst);
    }
    let order: Vec<&NodeId> = adj.keys().copied().collect();
    let rank: HashMap<&NodeId, usize> = order.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    let mut cycles = Vec::new();
    for (root_rank, root) in order.iter().enumerate() {
        let mut path = vec![*root];
        let mut on_path: HashSet<&NodeId> = HashSet::from([*root]);
        // Explicit DFS stack of neighbour iterators.
        let mut stack: Vec<Vec<&NodeId>> = vec![succ(&adj, root)];
        while let Some(frontier) = stack.last_mut() {
            let Some(next) = frontier.pop() else {
                stack.pop();
                if let Some(n) = path.pop() {
                    on_path.remove(n);
                }
                continue;
            };
            if next == *root {
                let mut cycle: Vec<NodeId> = path.iter().map(|n| (*n).clone()).collect();
                cycle.push((*root).clone());
                cycles.push(cycle);
                if cycles.len() >= limit {
                    return (cycles, true);
                }
                continue;
            }
            // Only nodes ranked above the root, so each cycle has one root.
            let above = rank.get(next).is_some_and(|&r| r > root_rank);
            if above && !on_path.contains(next) {
                path.push(next);
                on_path.insert(next);
                stack.push(succ(&adj, next));
            }
        }
    }
    (cycles, false)
}

fn succ<'a>(adj: &BTreeMap<&'a NodeId, BTreeSet<&'a NodeId>>, n: &NodeId) -> Vec<&'a NodeId> {
    // Reversed so that popping visits neighbours in ascending order.
    adj.get(n).map_or_else(Vec::new, |s| s.iter().rev().copied().collect())
}
