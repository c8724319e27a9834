//! Command-line front end: `build`, `query`, `eval` and `inspect`.
//!
//! Every command writes to caller-supplied streams and returns an exit
//! status, so the binary stays a thin shell around [`run`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{retrieve_topk, LexicalIndex, Scorer, VectorFile, VectorIndex};
use crate::context::{render_prompt_block, ContextBundle};
use crate::corpus::load_corpus;
use crate::eval::{check_gold_against, evaluate, load_gold, render_table, Evaluation};
use crate::graph::{self, build_graph, DependencyGraph};
use crate::retriever::{Limits, RetrievalStats};
use crate::tagger::{AliasFile, TagSet};
use crate::Engine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "sgkr", version, about = "Structure-grounded knowledge retrieval")]
pub struct Cli {
    /// JSON config file supplying defaults for any flag.
    #[arg(long, env = "SGKR_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dependency graph document from a corpus manifest.
    Build(BuildArgs),
    /// Retrieve context for one question.
    Query(QueryArgs),
    /// Score retrieval methods against gold annotations.
    Eval(EvalArgs),
    /// List or export the nodes and edges of a graph.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Lexical,
    Vectors,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Where to write the graph document; defaults to the configured graph.
    #[arg(long, alias = "graph")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_paths: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub question: String,
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    #[command(flatten)]
    pub limits: LimitArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub gold: PathBuf,
    /// Comma-separated subset of sgkr, lexical, vectors.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Node budget of the baselines; defaults to the rounded average
    /// number of nodes retrieved by sgkr.
    #[arg(long)]
    pub k: Option<usize>,
    /// Baseline scorer used when no methods are named.
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Also write the structured report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Print Graphviz DOT instead of a listing.
    #[arg(long)]
    pub dot: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

/// Defaults read from a JSON config file. Relative paths are taken relative
/// to the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub manifest: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub max_depth: Option<usize>,
    pub max_paths: Option<usize>,
    pub aliases: Option<PathBuf>,
    pub k: Option<usize>,
    pub scorer: Option<ScorerKind>,
    pub vectors: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let mut config: Config = serde_path_to_error::deserialize(de)
            .map_err(|e| anyhow!("config {}: at {}: {}", path.display(), e.path(), e.inner()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.manifest, &mut config.graph, &mut config.aliases, &mut config.vectors]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    fn limits(&self, flags: &LimitArgs) -> Result<Limits> {
        let d = Limits::default();
        let limits = Limits {
            max_depth: flags.max_depth.or(self.max_depth).unwrap_or(d.max_depth),
            max_paths: flags.max_paths.or(self.max_paths).unwrap_or(d.max_paths),
        };
        if limits.max_depth == 0 || limits.max_paths == 0 {
            bail!("--max-depth and --max-paths must be positive");
        }
        Ok(limits)
    }
}

fn pick(flag: &Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| config.clone())
        .ok_or_else(|| anyhow!("no {what} given; pass --{what} or set it in the config file"))
}

/// Runs a parsed command line, reporting errors on `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = cli
        .config
        .as_deref()
        .map(Config::load)
        .transpose()
        .map(Option::unwrap_or_default)
        .and_then(|config| match &cli.command {
            Command::Build(a) => cmd_build(a, &config, out),
            Command::Query(a) => cmd_query(a, &config, out),
            Command::Eval(a) => cmd_eval(a, &config, out),
            Command::Inspect(a) => cmd_inspect(a, &config, out),
        });
    match result {
        Ok(()) => EXIT_OK,
        // A closed pipe (`sgkr ... | head`) is not a failure.
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<std::io::Error>()
        .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn load_graph(path: &Path) -> Result<DependencyGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read graph {}", path.display()))?;
    graph::deserialize(&text).with_context(|| format!("invalid graph document {}", path.display()))
}

fn load_engine(graph_path: &Path, aliases: Option<&Path>) -> Result<Engine> {
    let graph = load_graph(graph_path)?;
    let aliases = aliases.map(AliasFile::load).transpose()?;
    Ok(Engine::new(graph, aliases.as_ref())?)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn cmd_build(args: &BuildArgs, config: &Config, out: &mut dyn Write) -> Result<()> {
    let manifest = pick(&args.manifest, &config.manifest, "manifest")?;
    let target = pick(&args.out, &config.graph, "out")?;
    let corpus = load_corpus(&manifest)?;
    let built = build_graph(&corpus)?;
    write_file(&target, &graph::serialize(&built.graph))?;

    let g = &built.graph;
    writeln!(
        out,
        "built {}: {} kc-nodes, {} io-nodes, {} edges",
        target.display(),
        g.kc_nodes.len(),
        g.io_nodes.len(),
        g.edges.len()
    )?;
    writeln!(
        out,
        "entries: {}, functions parsed: {}, merged duplicates: {}",
        built.stats.entries, built.stats.raw_kc_nodes, built.stats.merged_duplicates
    )?;
    let more = if built.report.cycles_truncated { "+" } else { "" };
    writeln!(out, "call cycles: {}{more}", built.report.cycles.len())?;
    for cycle in &built.report.cycles {
        let ids: Vec<_> = cycle.iter().map(|n| n.as_str()).collect();
        writeln!(out, "  {}", ids.join(" -> "))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct QueryReport<'a> {
    question: &'a str,
    fallback: bool,
    tags: &'a TagSet,
    paths: Vec<Vec<&'a str>>,
    stats: &'a RetrievalStats,
    context: &'a ContextBundle,
}

pub fn cmd_query(args: &QueryArgs, config: &Config, out: &mut dyn Write) -> Result<()> {
    let graph_path = pick(&args.graph, &config.graph, "graph")?;
    let aliases = args.aliases.clone().or_else(|| config.aliases.clone());
    let limits = config.limits(&args.limits)?;
    let engine = load_engine(&graph_path, aliases.as_deref())?;
    let outcome = engine.query(&args.question, limits)?;
    let r = &outcome.result;

    let text = match args.format {
        Format::Structured => {
            let report = QueryReport {
                question: &args.question,
                fallback: r.fallback,
                tags: &outcome.tags,
                paths: r
                    .paths
                    .iter()
                    .map(|p| p.nodes.iter().map(|n| n.as_str()).collect())
                    .collect(),
                stats: &r.stats,
                context: &outcome.bundle,
            };
            serde_json::to_string_pretty(&report)? + "\n"
        }
        Format::Text if r.fallback => "FALLBACK\n".to_owned(),
        Format::Text if r.paths.is_empty() => {
            let mut s = String::from("no dependency paths found\n");
            if r.stats.depth_truncated {
                s.push_str(&format!(
                    "note: search stopped at --max-depth {}; longer paths may exist\n",
                    limits.max_depth
                ));
            }
            s
        }
        Format::Text => {
            let mut s = render_prompt_block(&outcome.bundle);
            if r.stats.paths_truncated {
                s.push_str(&format!("\nnote: path limit {} reached; context may be partial\n", limits.max_paths));
            }
            s
        }
    };
    match &args.out {
        Some(path) => write_file(path, &text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn cmd_eval(args: &EvalArgs, config: &Config, out: &mut dyn Write) -> Result<()> {
    let graph_path = pick(&args.graph, &config.graph, "graph")?;
    let aliases = args.aliases.clone().or_else(|| config.aliases.clone());
    let vectors = args.vectors.clone().or_else(|| config.vectors.clone());
    let limits = config.limits(&args.limits)?;
    let engine = load_engine(&graph_path, aliases.as_deref())?;
    let gold = load_gold(&args.gold)?;
    check_gold_against(&gold, engine.graph())?;

    let methods: Vec<String> = if args.methods.is_empty() {
        let baseline = match args.scorer.or(config.scorer) {
            Some(ScorerKind::Vectors) => "vectors",
            _ => "lexical",
        };
        vec!["sgkr".into(), baseline.into()]
    } else {
        args.methods.iter().map(|m| m.trim().to_owned()).collect()
    };
    for m in &methods {
        if !matches!(m.as_str(), "sgkr" | "lexical" | "vectors") {
            bail!("unknown method `{m}`; expected sgkr, lexical or vectors");
        }
    }

    // sgkr always runs: its average context size is the default baseline budget.
    let mut sgkr_results = BTreeMap::new();
    for g in &gold {
        let outcome = engine.query(&g.question, limits)?;
        let names: BTreeSet<String> = outcome.function_names().into_iter().map(str::to_owned).collect();
        sgkr_results.insert(g.question.clone(), names);
    }
    let sgkr = evaluate("sgkr", &sgkr_results, &gold)?;
    let k = match args.k.or(config.k) {
        Some(0) => bail!("--k must be positive"),
        Some(k) => k,
        None => (sgkr.aggregate.avg_nodes.round() as usize).max(1),
    };

    let lexical = LexicalIndex::new(engine.graph());
    let mut evaluations: Vec<Evaluation> = Vec::new();
    for m in &methods {
        let evaluation = match m.as_str() {
            "sgkr" => sgkr.clone(),
            "lexical" => baseline_eval(m, &gold_questions(&gold), k, &Scorer::Lexical(&lexical), &gold)?,
            _ => {
                let path = vectors
                    .as_deref()
                    .ok_or_else(|| anyhow!("method `vectors` needs --vectors or a configured vector file"))?;
                let index = VectorIndex::new(engine.graph(), VectorFile::load(path)?)?;
                baseline_eval(m, &gold_questions(&gold), k, &Scorer::Vectors(&index), &gold)?
            }
        };
        evaluations.push(evaluation);
    }

    let structured = serde_json::to_string_pretty(&EvalReport { k, evaluations: &evaluations })? + "\n";
    if let Some(path) = &args.out {
        write_file(path, &structured)?;
    }
    match args.format {
        Format::Text => write!(out, "{}", render_table(&evaluations))?,
        Format::Structured => out.write_all(structured.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalReport<'a> {
    k: usize,
    evaluations: &'a [Evaluation],
}

fn gold_questions(gold: &[crate::eval::GoldAnnotation]) -> Vec<&str> {
    gold.iter().map(|g| g.question.as_str()).collect()
}

fn baseline_eval(
    method: &str,
    questions: &[&str],
    k: usize,
    scorer: &Scorer<'_>,
    gold: &[crate::eval::GoldAnnotation],
) -> Result<Evaluation> {
    let mut results = BTreeMap::new();
    for q in questions {
        let names = retrieve_topk(q, k, scorer)?.into_iter().map(|(n, _)| n).collect();
        results.insert((*q).to_owned(), names);
    }
    Ok(evaluate(method, &results, gold)?)
}

pub fn cmd_inspect(args: &InspectArgs, config: &Config, out: &mut dyn Write) -> Result<()> {
    let graph_path = pick(&args.graph, &config.graph, "graph")?;
    let g = load_graph(&graph_path)?;
    if args.dot {
        return Ok(out.write_all(graph::to_dot(&g).as_bytes())?);
    }
    if args.format == Format::Structured {
        return Ok(out.write_all(graph::serialize(&g).as_bytes())?);
    }
    writeln!(out, "kc-nodes ({}):", g.kc_nodes.len())?;
    for n in &g.kc_nodes {
        writeln!(out, "  {}  [{}]", n.node_id, n.origin_entries.join(", "))?;
    }
    writeln!(out, "io-nodes ({}):", g.io_nodes.len())?;
    for n in &g.io_nodes {
        writeln!(out, "  {}  ({})", n.node_id, n.kind)?;
    }
    writeln!(out, "edges ({}):", g.edges.len())?;
    for e in &g.edges {
        writeln!(out, "  {} -> {}  {}", e.src, e.dst, e.kind)?;
    }
    Ok(())
}
