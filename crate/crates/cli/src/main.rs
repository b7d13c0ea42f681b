//! `lightkg`: build knowledge graphs from text.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lightkg_core::evaluation::{evaluate, GoldSet, MatchPolicy};
use lightkg_core::graph::serialize_to_vec;
use lightkg_core::pipeline::{
    aggregate_results, build_client, chunk_corpus, discover_graph, extract_chunks, format_for_path, read_corpus,
    read_graph, read_rules, read_senses, read_triples, run_pipeline, triples_to_jsonl, PipelineConfig, PipelineError,
    Stage,
};

#[derive(Parser)]
#[command(name = "lightkg", version, about = "Knowledge graph extraction with small language models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk a corpus and extract triples (one JSON result per chunk).
    Extract {
        /// Corpus JSONL, one {"id","text"} object per line.
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Pipeline config; defaults apply when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Fold extracted triples into one graph.
    Aggregate {
        /// Triples JSONL written by `extract`.
        triples: PathBuf,
        /// Output graph; `.graphml` selects GraphML, anything else JSON.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Score edges, disambiguate entities and apply inference rules.
    Discover {
        graph: PathBuf,
        /// Rules JSON; falls back to the config's `rules` entry.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Senses JSON; falls back to the config's `senses` entry.
        #[arg(long)]
        senses: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Entity and relation F1 of a graph against gold triples.
    Eval {
        graph: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Relation matching: `strict` or `relaxed`.
        #[arg(long, default_value = "strict")]
        policy: MatchPolicy,
        /// Count inferred edges as predictions.
        #[arg(long)]
        include_inferred: bool,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
        /// Also write the JSON report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Run every stage and write triples, graph and summary into a directory.
    Pipeline {
        corpus: PathBuf,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
    let config = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    config.check_files()?;
    Ok(config)
}

fn write_file(stage: Stage, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::Internal {
            stage,
            message: format!("{}: {e}", parent.display()),
        })?;
    }
    fs::write(path, bytes).map_err(|e| PipelineError::Internal {
        stage,
        message: format!("{}: {e}", path.display()),
    })
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Extract { corpus, output, config } => {
            let config = load_config(config.as_deref())?;
            let docs = read_corpus(&corpus)?;
            let client = build_client(&config)?;
            let outcome = extract_chunks(&chunk_corpus(&docs, config.max_chunk_chars), &config, client.as_deref());
            if let Some(e) = outcome.error {
                return Err(e);
            }
            write_file(Stage::Extract, &output, triples_to_jsonl(&outcome.results).as_bytes())
        }
        Command::Aggregate { triples, output, config } => {
            let config = load_config(config.as_deref())?;
            let aggregated = aggregate_results(&read_triples(&triples)?, &config);
            for r in &aggregated.rejects {
                log::warn!("rejected triple ({} | {} | {}): {}", r.triple.subject, r.triple.predicate, r.triple.object, r.reason);
            }
            write_file(Stage::Aggregate, &output, &serialize_to_vec(&aggregated.graph, format_for_path(&output)))
        }
        Command::Discover {
            graph,
            rules,
            senses,
            output,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let g = read_graph(Stage::Discover, &graph)?;
            let rules = match rules.or(config.rules.clone()) {
                Some(p) => read_rules(&p)?,
                None => Vec::new(),
            };
            let senses = match senses.or(config.senses.clone()) {
                Some(p) => read_senses(&p, &config.normalization)?,
                None => Default::default(),
            };
            let (out, report) = discover_graph(&g, &config, &rules, &senses);
            for e in &report.errors {
                log::warn!("discovery step `{}` failed: {}", e.step, e.message);
            }
            write_file(Stage::Discover, &output, &serialize_to_vec(&out, format_for_path(&output)))
        }
        Command::Eval {
            graph,
            gold,
            policy,
            include_inferred,
            json,
            report,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let g = read_graph(Stage::Evaluate, &graph)?;
            let gold = GoldSet::load(&gold, &config.normalization)?;
            let result = evaluate(&g, &gold, policy, include_inferred);
            let report_json = serde_json::to_string_pretty(&result).expect("report serializes");
            if let Some(path) = report {
                write_file(Stage::Evaluate, &path, report_json.as_bytes())?;
            }
            if json {
                println!("{report_json}");
            } else {
                print!("{}", result.render_table());
            }
            Ok(())
        }
        Command::Pipeline { corpus, config, output } => {
            let config = PipelineConfig::load(&config)?;
            let summary = run_pipeline(&config, &corpus, &output)?;
            let c = &summary.counts;
            println!(
                "{} documents, {} chunks, {} triples -> {} nodes, {} edges ({} inferred); wrote {}",
                c.documents,
                c.chunks,
                c.triples,
                c.nodes,
                c.edges,
                c.inferred_edges,
                output.display()
            );
            if let Some(report) = &summary.evaluation {
                print!("{}", report.render_table());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 1 {
                eprintln!("run `lightkg --help` for usage");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
