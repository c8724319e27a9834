//! Structure-grounded knowledge retrieval.
//!
//! Example solutions are parsed into a function-call dependency graph whose
//! nodes carry the domain knowledge bound to each function. Semantic input
//! and output nodes anchor the graph; a question is answered by finding the
//! dependency paths between the inputs and outputs it mentions and
//! returning the knowledge and code along them.
//!
//! Offline: [`corpus::load_corpus`] → [`graph::build_graph`] →
//! [`graph::serialize`]. Online: [`tagger::extract_tags`] →
//! [`retriever::retrieve`] → [`context::assemble_context`].

pub mod baselines;
pub mod cli;
pub mod context;
pub mod corpus;
pub mod engine;
pub mod eval;
pub mod graph;
pub mod normalize;
pub mod parser;
pub mod retriever;
pub mod tagger;

pub use engine::{Engine, QueryOutcome};
