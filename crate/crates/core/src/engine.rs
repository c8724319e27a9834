use crate::context::{assemble_context, ContextBundle};
use crate::graph::DependencyGraph;
use crate::retriever::{retrieve, Limits, RetrievalError, RetrievalResult};
use crate::tagger::{build_vocabulary, extract_tags, AliasFile, TagError, TagSet, TagVocabulary};

/// A loaded graph with its tag vocabulary, ready for queries.
#[derive(Debug, Clone)]
pub struct Engine {
    graph: DependencyGraph,
    vocabulary: TagVocabulary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome {
    pub tags: TagSet,
    pub result: RetrievalResult,
    pub bundle: ContextBundle,
}

impl QueryOutcome {
    /// Function names of the retrieved knowledge-code nodes.
    pub fn function_names(&self) -> Vec<&str> {
        self.bundle.function_names()
    }
}

impl Engine {
    pub fn new(graph: DependencyGraph, aliases: Option<&AliasFile>) -> Result<Self, TagError> {
        let vocabulary = build_vocabulary(&graph, aliases)?;
        Ok(Self { graph, vocabulary })
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn vocabulary(&self) -> &TagVocabulary {
        &self.vocabulary
    }

    pub fn query(&self, question: &str, limits: Limits) -> Result<QueryOutcome, RetrievalError> {
        let tags = extract_tags(question, &self.vocabulary);
        let result = retrieve(&self.graph, &tags, limits)?;
        let bundle = assemble_context(&result, &self.graph);
        Ok(QueryOutcome { tags, result, bundle })
    }
}
