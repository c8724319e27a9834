//! Random graph generators and brute-force oracles shared by the test
//! targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::Rng;

use sgkr::graph::{DependencyGraph, Edge, EdgeKind, IoKind, IoNode, KnowledgeCodeNode, NodeId};

pub fn kc(id: &str, name: &str, entry: &str) -> KnowledgeCodeNode {
    KnowledgeCodeNode {
        node_id: NodeId::from(id),
        function_name: name.to_owned(),
        code: format!("def {name}():\n    return {id:?}"),
        knowledge: format!("knowledge of {name} in {entry}"),
        origin_entries: vec![entry.to_owned()],
        variants: vec![],
    }
}

pub fn io(kind: IoKind, label: &str) -> IoNode {
    IoNode {
        node_id: NodeId::from(format!("{kind}::{label}")),
        label: label.to_owned(),
        kind,
    }
}

/// A pre-merge graph of at most `max_nodes` knowledge-code nodes whose
/// names are drawn from a small pool, so duplicates are common. Some I/O
/// nodes are attached as well.
pub fn random_premerge(rng: &mut StdRng, max_nodes: usize) -> DependencyGraph {
    let n = rng.gen_range(1..=max_nodes);
    let pool = rng.gen_range(1..=n.max(2));
    let mut g = DependencyGraph::default();
    for i in 0..n {
        let entry = format!("e{}", rng.gen_range(0..4));
        let name = format!("f{}", rng.gen_range(0..pool));
        // Ids do not sort like build order, so canonical choice is exercised.
        let id = format!("{entry}::{name}#{}", rng.gen_range(0..1000) * 100 + i);
        let mut node = kc(&id, &name, &entry);
        if rng.gen_bool(0.3) {
            node.knowledge = format!("shared knowledge of {name}");
        }
        if rng.gen_bool(0.3) {
            node.code = format!("def {name}():\n    pass");
        }
        g.kc_nodes.push(node);
    }
    let ids: Vec<NodeId> = g.kc_nodes.iter().map(|k| k.node_id.clone()).collect();
    let edges = rng.gen_range(0..=2 * n);
    for _ in 0..edges {
        let a = &ids[rng.gen_range(0..n)];
        let b = &ids[rng.gen_range(0..n)];
        g.edges.insert(Edge::call(a, b));
    }
    for (kind, count) in [(IoKind::Input, rng.gen_range(0..3)), (IoKind::Output, rng.gen_range(0..3))] {
        for j in 0..count {
            let node = io(kind, &format!("l{j}"));
            let anchor = &ids[rng.gen_range(0..n)];
            let edge = match kind {
                IoKind::Input => Edge::new(node.node_id.clone(), anchor.clone(), EdgeKind::Feeds),
                IoKind::Output => Edge::new(anchor.clone(), node.node_id.clone(), EdgeKind::Yields),
            };
            g.edges.insert(edge);
            g.io_nodes.push(node);
        }
    }
    g
}

/// Brute-force merge: each node maps to the first node of the same name in
/// build order; edges are relabeled and collected into a set.
pub fn merge_oracle(g: &DependencyGraph) -> (BTreeSet<NodeId>, BTreeSet<Edge>) {
    let canonical = |id: &NodeId| -> NodeId {
        let Some(node) = g.kc_nodes.iter().find(|k| &k.node_id == id) else {
            return id.clone();
        };
        g.kc_nodes
            .iter()
            .find(|k| k.function_name == node.function_name)
            .unwrap()
            .node_id
            .clone()
    };
    let nodes = g
        .kc_nodes
        .iter()
        .map(|k| canonical(&k.node_id))
        .chain(g.io_nodes.iter().map(|n| n.node_id.clone()))
        .collect();
    let edges = g
        .edges
        .iter()
        .map(|e| Edge::new(canonical(&e.src), canonical(&e.dst), e.kind))
        .collect();
    (nodes, edges)
}

pub fn node_ids(g: &DependencyGraph) -> BTreeSet<NodeId> {
    g.kc_nodes
        .iter()
        .map(|k| k.node_id.clone())
        .chain(g.io_nodes.iter().map(|n| n.node_id.clone()))
        .collect()
}

/// A graph of at most 12 nodes for path enumeration, with its sources and
/// targets.
pub struct PathCase {
    pub graph: DependencyGraph,
    pub sources: Vec<NodeId>,
    pub targets: Vec<NodeId>,
    pub max_depth: usize,
}

pub fn random_path_case(rng: &mut StdRng) -> PathCase {
    let inputs = rng.gen_range(1..=2);
    let outputs = rng.gen_range(1..=2);
    let kcs = rng.gen_range(1..=12 - inputs - outputs);
    let mut g = DependencyGraph::default();
    for i in 0..kcs {
        // Two-digit names keep lexicographic and numeric order apart.
        let name = format!("k{}", (i * 7) % 12);
        g.kc_nodes.push(kc(&name, &name, "e"));
    }
    let ids: Vec<NodeId> = g.kc_nodes.iter().map(|k| k.node_id.clone()).collect();
    let density = rng.gen_range(0.05..0.5);
    for a in &ids {
        for b in &ids {
            if rng.gen_bool(density) {
                g.edges.insert(Edge::call(a, b));
            }
        }
    }
    for j in 0..inputs {
        let node = io(IoKind::Input, &format!("in{j}"));
        for a in &ids {
            if rng.gen_bool(0.3) {
                g.edges.insert(Edge::new(node.node_id.clone(), a.clone(), EdgeKind::Feeds));
            }
        }
        g.io_nodes.push(node);
    }
    for j in 0..outputs {
        let node = io(IoKind::Output, &format!("out{j}"));
        for a in &ids {
            if rng.gen_bool(0.3) {
                g.edges.insert(Edge::new(a.clone(), node.node_id.clone(), EdgeKind::Yields));
            }
        }
        g.io_nodes.push(node);
    }
    let pick = |rng: &mut StdRng, kind: IoKind| -> Vec<NodeId> {
        let all: Vec<NodeId> = g.io_nodes.iter().filter(|n| n.kind == kind).map(|n| n.node_id.clone()).collect();
        let chosen: Vec<NodeId> = all.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect();
        if chosen.is_empty() { vec![all[0].clone()] } else { chosen }
    };
    let sources = pick(rng, IoKind::Input);
    let targets = pick(rng, IoKind::Output);
    let max_depth = rng.gen_range(1..=12);
    PathCase { graph: g, sources, targets, max_depth }
}

/// Every simple path by exhaustive depth-first search: CALL edges either
/// way, FEEDS and YIELDS only as stored, interior nodes knowledge-code
/// nodes. Sorted by length, then by node ids.
pub fn paths_oracle(case: &PathCase) -> Vec<Vec<NodeId>> {
    let g = &case.graph;
    let is_kc = |id: &NodeId| g.kc_nodes.iter().any(|k| &k.node_id == id);
    let neighbours = |u: &NodeId| -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for e in &g.edges {
            if &e.src == u {
                out.insert(e.dst.clone());
            }
            if e.kind == EdgeKind::Call && &e.dst == u {
                out.insert(e.src.clone());
            }
        }
        out
    };
    fn dfs(
        path: &mut Vec<NodeId>,
        case: &PathCase,
        neighbours: &dyn Fn(&NodeId) -> BTreeSet<NodeId>,
        is_kc: &dyn Fn(&NodeId) -> bool,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        // One more step would give `path.len()` edges.
        if path.len() > case.max_depth {
            return;
        }
        let last = path.last().unwrap().clone();
        for next in neighbours(&last) {
            if path.contains(&next) {
                continue;
            }
            if case.targets.contains(&next) {
                let mut done = path.clone();
                done.push(next);
                out.push(done);
            } else if is_kc(&next) {
                path.push(next);
                dfs(path, case, neighbours, is_kc, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    let sources: BTreeSet<&NodeId> = case.sources.iter().collect();
    for s in sources {
        dfs(&mut vec![s.clone()], case, &neighbours, &is_kc, &mut out);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out.dedup();
    out
}

/// Greedy tag matching recomputed from scratch after every claim.
pub fn tags_oracle(tokens: &[String], phrases: &BTreeMap<String, Vec<Vec<String>>>) -> BTreeSet<String> {
    let mut free = vec![true; tokens.len()];
    let mut out = BTreeSet::new();
    loop {
        let mut best: Option<(usize, usize, &str)> = None;
        for (label, variants) in phrases {
            for p in variants {
                if p.is_empty() || p.len() > tokens.len() {
                    continue;
                }
                for start in 0..=tokens.len() - p.len() {
                    let span = start..start + p.len();
                    if tokens[span.clone()] != p[..] || !free[span].iter().all(|f| *f) {
                        continue;
                    }
                    let cand = (p.len(), start, label.as_str());
                    let better = match best {
                        None => true,
                        Some(b) => cand.0 > b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
        }
        let Some((len, start, label)) = best else {
            return out;
        };
        free[start..start + len].iter_mut().for_each(|f| *f = false);
        out.insert(label.to_owned());
    }
}
