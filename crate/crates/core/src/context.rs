//! Context bundles built from a retrieved subgraph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::graph::DependencyGraph;
use crate::retriever::{DependencyPath, RetrievalResult};

pub const KNOWLEDGE_HEADER: &str = "Following domain knowledge and context should be helpful:";
pub const FUNCTIONS_HEADER: &str = "Here are some example functions that you may refer to:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub function_name: String,
    pub knowledge: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeExample {
    pub function_name: String,
    pub code: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub knowledge_texts: Vec<KnowledgeItem>,
    pub code_examples: Vec<CodeExample>,
    pub source_paths: Vec<DependencyPath>,
}

impl ContextBundle {
    pub fn is_empty(&self) -> bool {
        self.knowledge_texts.is_empty()
    }

    pub fn function_names(&self) -> Vec<&str> {
        self.knowledge_texts.iter().map(|k| k.function_name.as_str()).collect()
    }
}

/// Knowledge and code of every knowledge-code node in the result, callees
/// before callers (CALL edges inside the subgraph), ties by function name.
/// Nodes on a CALL cycle are emitted by name once nothing else is ready.
pub fn assemble_context(result: &RetrievalResult, graph: &DependencyGraph) -> ContextBundle {
    if result.fallback {
        return ContextBundle::default();
    }
    let nodes = result.kc_nodes(graph);
    let in_subgraph: BTreeSet<_> = nodes.iter().map(|n| &n.node_id).collect();

    // Remaining callees per node, restricted to the subgraph, self-calls ignored.
    let mut pending: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut callers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let name_of: BTreeMap<_, &str> = nodes.iter().map(|n| (&n.node_id, n.function_name.as_str())).collect();
    for n in &nodes {
        pending.entry(n.function_name.as_str()).or_default();
    }
    for e in graph.edges_of_kind(crate::graph::EdgeKind::Call) {
        if e.src == e.dst || !in_subgraph.contains(&e.src) || !in_subgraph.contains(&e.dst) {
            continue;
        }
        let (caller, callee) = (name_of[&e.src], name_of[&e.dst]);
        pending.get_mut(caller).expect("caller present").insert(callee);
        callers.entry(callee).or_default().push(caller);
    }

    let mut order: Vec<&str> = Vec::with_capacity(nodes.len());
    let mut ready: BTreeSet<&str> = pending.iter().filter(|(_, c)| c.is_empty()).map(|(n, _)| *n).collect();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    while order.len() < nodes.len() {
        let next = match ready.pop_first() {
            Some(n) => n,
            // A cycle blocks progress; release its smallest name.
            None => *pending
                .keys()
                .find(|n| !done.contains(*n))
                .expect("unfinished node exists"),
        };
        if !done.insert(next) {
            continue;
        }
        order.push(next);
        for caller in callers.get(next).into_iter().flatten() {
            let waiting = pending.get_mut(caller).expect("caller present");
            waiting.remove(next);
            if waiting.is_empty() && !done.contains(caller) {
                ready.insert(caller);
            }
        }
    }

    let by_name: BTreeMap<&str, _> = nodes.iter().map(|n| (n.function_name.as_str(), *n)).collect();
    let mut bundle = ContextBundle {
        source_paths: result.paths.clone(),
        ..ContextBundle::default()
    };
    for name in order {
        let node = by_name[name];
        bundle.knowledge_texts.push(KnowledgeItem {
            function_name: node.function_name.clone(),
            knowledge: node.knowledge.clone(),
        });
        bundle.code_examples.push(CodeExample {
            function_name: node.function_name.clone(),
            code: node.code.clone(),
        });
    }
    bundle
}

/// The "Context and Hints" block: knowledge section then function section.
pub fn render_prompt_block(bundle: &ContextBundle) -> String {
    let mut out = String::new();
    out.push_str(KNOWLEDGE_HEADER);
    out.push('\n');
    for item in &bundle.knowledge_texts {
        let _ = write!(out, "\n[{}]\n{}\n", item.function_name, item.knowledge.trim_end());
    }
    out.push('\n');
    out.push_str(FUNCTIONS_HEADER);
    out.push('\n');
    for ex in &bundle.code_examples {
        let _ = write!(out, "\n```python\n{}\n```\n", ex.code.trim_end());
    }
    out
}
