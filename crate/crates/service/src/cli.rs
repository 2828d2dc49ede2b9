//! Command-line interface: one-shot search, tool administration, the
//! ranking lab, reward batch evaluation, cache stats, and trace
//! inspection. Every command exits 0 on success and prints a single
//! machine-readable error line otherwise.

use crate::{App, ServiceConfig};
use clap::{Parser, Subcommand, ValueEnum};
use skein_core::{Document, Query, RankedList, ToolId};
use skein_ranking::{
    pairwise_rank, pointwise_scores, sliding_window_rank, tournament_rank, Comparator,
    PairwiseStrategy, TournamentConfig,
};
use skein_rewards::{planner_reward, FeedbackSignal, RewardConfig};
use skein_tools::refine::refine_documentation;
use skein_tools::{DiscoverFilter, RefineOptions};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "skein", version, about = "Multi-agent search pipeline")]
pub struct Cli {
    /// Path to the service config file.
    #[arg(long, global = true, default_value = "config/service.json")]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run one query end to end and print the answer.
    Search { text: String },
    /// Start the HTTP service.
    Serve,
    /// Tool administration.
    Tools {
        #[command(subcommand)]
        command: ToolsCommand,
    },
    /// Ranking lab: run one ranking method over a document fixture.
    Rank {
        #[command(subcommand)]
        command: RankCommand,
    },
    /// Reward batch evaluation.
    Rewards {
        #[command(subcommand)]
        command: RewardsCommand,
    },
    /// Cache statistics.
    Cache {
        #[command(subcommand)]
        command: CacheCommand,
    },
    /// Trace inspection.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
}

#[derive(Subcommand)]
pub enum ToolsCommand {
    /// List registered tools.
    List,
    /// Validate and register a manifest file.
    Register { manifest: PathBuf },
    /// Refine one tool's documentation.
    Refine {
        tool_id: String,
        #[arg(long, default_value_t = 8)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.9)]
        phi: f64,
        #[arg(long, default_value_t = 0.9)]
        tau: f64,
    },
    /// Cluster the registry into toolkits.
    Cluster {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum RankMethod {
    Sliding,
    Tournament,
    Pairwise,
    Pointwise,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PairwiseStrategyArg {
    AllPairs,
    Heap,
    Bubble,
}

#[derive(Subcommand)]
pub enum RankCommand {
    /// Rank a document fixture against an oracle relevance file and emit a
    /// TSV run file (query_id doc_id rank score method).
    Run {
        #[arg(long)]
        method: RankMethod,
        #[arg(long, default_value = "fixtures/ranking/docs.json")]
        docs: PathBuf,
        /// Oracle relevance file: JSON id -> gain.
        #[arg(long, default_value = "fixtures/ranking/gains.json")]
        gains: PathBuf,
        #[arg(long, default_value = "bench")]
        query_id: String,
        #[arg(long, default_value_t = 20)]
        w: usize,
        #[arg(long, default_value_t = 10)]
        s: usize,
        #[arg(long, default_value_t = 10)]
        groups: usize,
        #[arg(long, default_value_t = 5)]
        advance: usize,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PairwiseStrategyArg::Heap)]
        strategy: PairwiseStrategyArg,
    },
}

#[derive(Subcommand)]
pub enum RewardsCommand {
    /// Evaluate JSONL episodes into a CSV of reward breakdowns.
    Eval { episodes: PathBuf },
}

#[derive(Subcommand)]
pub enum CacheCommand {
    /// Print cache counters (from the persisted cache file when configured).
    Stats,
}

#[derive(Subcommand)]
pub enum TraceCommand {
    /// Print the JSONL events of one trace id from the trace directory.
    Show { id: String },
}

#[derive(serde::Deserialize)]
struct EpisodeLine {
    correct: bool,
    feedback: Option<String>,
    well_formatted: bool,
    #[serde(default)]
    exec_scores: Vec<f64>,
}

pub fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Search { text } => {
            let app = build_app(&cli.config)?;
            let outcome = app.search(&text, Vec::new()).map_err(stringify)?;
            println!("{}", outcome.answer_text);
            eprintln!(
                "config={} trace={} cached={}",
                outcome.config_used, outcome.trace_id, outcome.cached
            );
            Ok(())
        }
        Command::Serve => {
            let app = Arc::new(build_app(&cli.config)?);
            let addr = app.config.listen_addr.clone();
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(stringify)?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(stringify)?;
                eprintln!("listening on {addr}");
                crate::http::serve(app, listener, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
                .map_err(stringify)
            })
        }
        Command::Tools { command } => run_tools(&cli.config, command),
        Command::Rank { command } => run_rank(command),
        Command::Rewards { command } => run_rewards(command),
        Command::Cache { command } => run_cache(&cli.config, command),
        Command::Trace { command } => run_trace(&cli.config, command),
    }
}

fn build_app(config_path: &Path) -> Result<App, String> {
    let config = ServiceConfig::load(config_path).map_err(stringify)?;
    App::build(config).map_err(stringify)
}

fn stringify(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

/// Writes one stdout line, treating a closed pipe (e.g. `| head`) as a
/// clean request to stop emitting.
fn emit(line: std::fmt::Arguments) -> bool {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{line}") {
        Ok(()) => true,
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => false,
        Err(_) => false,
    }
}

macro_rules! emit {
    ($($arg:tt)*) => {
        if !emit(format_args!($($arg)*)) {
            return Ok(());
        }
    };
}

fn run_tools(config_path: &Path, command: ToolsCommand) -> Result<(), String> {
    let app = build_app(config_path)?;
    match command {
        ToolsCommand::List => {
            for manifest in app.registry.discover(&DiscoverFilter::default()) {
                emit!(
                    "{}\t{}\t{}\tcost={}",
                    manifest.tool_id, manifest.semantic_role, manifest.name, manifest.cost
                );
            }
            Ok(())
        }
        ToolsCommand::Register { manifest } => {
            let text = std::fs::read_to_string(&manifest).map_err(stringify)?;
            let parsed: skein_tools::ToolManifest =
                serde_json::from_str(&text).map_err(stringify)?;
            let id = app.registry.register(parsed).map_err(stringify)?;
            println!("registered {id}");
            Ok(())
        }
        ToolsCommand::Refine {
            tool_id,
            max_iters,
            phi,
            tau,
        } => {
            let options = RefineOptions { max_iters, phi, tau };
            let outcome = refine_documentation(
                &app.registry,
                &ToolId::new(tool_id),
                options,
                &app.gateway,
            )
            .map_err(stringify)?;
            println!(
                "revision={} iterations={} converged={} deltas={:?}",
                outcome.doc.revision, outcome.iterations_run, outcome.converged, outcome.deltas
            );
            println!("{}", outcome.doc.current);
            Ok(())
        }
        ToolsCommand::Cluster { k, seed } => {
            let seed = seed.unwrap_or(app.config.default_seed);
            let toolkits = app
                .registry
                .assign_toolkits(&app.gateway, k, seed)
                .map_err(stringify)?;
            for toolkit in toolkits {
                let members: Vec<&str> = toolkit
                    .member_tool_ids
                    .iter()
                    .map(|id| id.as_str())
                    .collect();
                emit!("{}\t{}\t{}", toolkit.toolkit_id, toolkit.label, members.join(","));
            }
            Ok(())
        }
    }
}

fn print_run_file(query_id: &str, list: &RankedList) -> Result<(), String> {
    for (position, doc_id) in list.items.iter().enumerate() {
        let score = list
            .scores
            .as_ref()
            .and_then(|s| s.get(doc_id).copied())
            .unwrap_or(0.0);
        emit!(
            "{query_id}\t{doc_id}\t{}\t{score}\t{}",
            position + 1,
            list.method
        );
    }
    Ok(())
}

fn run_rank(command: RankCommand) -> Result<(), String> {
    let RankCommand::Run {
        method,
        docs,
        gains,
        query_id,
        w,
        s,
        groups,
        advance,
        rounds,
        seed,
        strategy,
    } = command;

    let docs_text = std::fs::read_to_string(&docs).map_err(stringify)?;
    let documents: Vec<Document> = serde_json::from_str(&docs_text).map_err(stringify)?;
    let gains_text = std::fs::read_to_string(&gains).map_err(stringify)?;
    let gain_map: BTreeMap<String, f64> = serde_json::from_str(&gains_text).map_err(stringify)?;

    let query = Query::new(query_id.clone(), "ranking lab query");
    let comparator = Comparator::oracle(gain_map.clone());

    let list = match method {
        RankMethod::Sliding => {
            sliding_window_rank(&query, &documents, w, s, &comparator).map_err(stringify)?
        }
        RankMethod::Tournament => {
            let config = TournamentConfig {
                group_size: groups,
                advance_n: advance,
                rounds_r: rounds,
                seed,
            };
            tournament_rank(&query, &documents, &config, &comparator, 4)
                .map_err(stringify)?
        }
        RankMethod::Pairwise => {
            let strategy = match strategy {
                PairwiseStrategyArg::AllPairs => PairwiseStrategy::AllPairs,
                PairwiseStrategyArg::Heap => PairwiseStrategy::HeapSort,
                PairwiseStrategyArg::Bubble => PairwiseStrategy::BubbleSort,
            };
            pairwise_rank(&query, &documents, &comparator, strategy).map_err(stringify)?
        }
        RankMethod::Pointwise => {
            let scores = pointwise_scores(&query, &documents, &comparator).map_err(stringify)?;
            let mut order: Vec<(String, f64)> =
                scores.iter().map(|(k, v)| (k.clone(), *v)).collect();
            order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            RankedList::new(order.into_iter().map(|(id, _)| id).collect(), "pointwise")
                .with_scores(scores)
        }
    };
    print_run_file(&query_id, &list)
}

fn run_rewards(command: RewardsCommand) -> Result<(), String> {
    let RewardsCommand::Eval { episodes } = command;
    let text = std::fs::read_to_string(&episodes).map_err(stringify)?;
    let config = RewardConfig::default();
    println!("answer,feedback,format,execution,total");
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: EpisodeLine = serde_json::from_str(line)
            .map_err(|e| format!("error: line {}: {e}", lineno + 1))?;
        let feedback = match parsed.feedback.as_deref() {
            Some("accepted") => FeedbackSignal::Accepted,
            Some("rejected") => FeedbackSignal::Rejected,
            None => FeedbackSignal::None,
            Some(other) => return Err(format!("error: line {}: unknown feedback {other:?}", lineno + 1)),
        };
        let breakdown = planner_reward(
            parsed.correct,
            feedback,
            parsed.well_formatted,
            &parsed.exec_scores,
            &config,
        )
        .map_err(stringify)?;
        emit!(
            "{},{},{},{},{}",
            breakdown.answer, breakdown.feedback, breakdown.format, breakdown.execution, breakdown.total
        );
    }
    Ok(())
}

fn run_cache(config_path: &Path, command: CacheCommand) -> Result<(), String> {
    let CacheCommand::Stats = command;
    let config = ServiceConfig::load(config_path).map_err(stringify)?;
    let stats = match &config.cache.persist_path {
        Some(path) if path.exists() => {
            let cache =
                skein_cache::SemanticCache::load(path, config.cache.capacity, config.cache.tau)
                    .map_err(stringify)?;
            cache.stats()
        }
        _ => skein_cache::SemanticCache::new(config.cache.capacity, config.cache.tau)
            .map_err(stringify)?
            .stats(),
    };
    println!(
        "lookups={} hits={} hit_rate={:.4}",
        stats.lookups,
        stats.hits,
        stats.hit_rate()
    );
    Ok(())
}

fn run_trace(config_path: &Path, command: TraceCommand) -> Result<(), String> {
    let TraceCommand::Show { id } = command;
    let config = ServiceConfig::load(config_path).map_err(stringify)?;
    let mut found = false;
    let mut entries: Vec<_> = std::fs::read_dir(&config.trace_dir)
        .map_err(stringify)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        let Ok(text) = std::fs::read_to_string(&path) else { continue };
        for line in text.lines() {
            if let Ok(event) = serde_json::from_str::<skein_core::TraceEvent>(line) {
                if event.trace_id == id {
                    if !emit(format_args!("{line}")) {
                        return Ok(());
                    }
                    found = true;
                }
            }
        }
    }
    if found {
        Ok(())
    } else {
        Err(format!("error: no events for trace id {id:?}"))
    }
}
