use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rtsum_core::budget::{plan_two_step, render_budget_table, DEFAULT_HUMAN_SHARE};
use rtsum_core::corpus::{
    corpus_stats, load_corpus, validate_sample, write_samples, CorpusSample, GuidelineOptions,
};
use rtsum_core::evaluate::{score_candidates, test_samples, EvaluationReport, ScopeFilter};
use rtsum_core::simulate::{draft_samples, simulate_conversation, split_for_index};
use rtsum_core::summarize::{BackendError, BackendKind, SummarizeTask};
use rtsum_core::wire::{encode_event, WireEvent};
use rtsum_core::Conversation;
use tokio::task::JoinSet;
use tracing::info;

use crate::backend::{build_backend, Summarizer};
use crate::config::FileConfig;
use crate::serve::{run_serve, serve_tcp, Hub, ServeConfig};

#[derive(Debug, Parser)]
#[command(name = "rtsum", version, about = "Windowed real-time summarization of conversation transcripts")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Utterances per local window
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Maximum seconds spanned by a local window
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true, value_parser = ["extractive", "remote"])]
    pub backend: Option<String>,
    /// Chat-completion URL for the remote backend
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["local", "global", "all"])]
    pub scope: Option<String>,
    /// Transcripts shorter than this many tokens are exempt from the 20% cap
    #[arg(long, global = true)]
    pub short_threshold: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stream utterance events in, summary events out
    Serve(ServeArgs),
    /// Score a backend on the test split of a corpus
    Evaluate(EvaluateArgs),
    /// Turn clean text into spoken-style conversations
    Simulate(SimulateArgs),
    /// Per-split corpus statistics
    Stats(CorpusArgs),
    /// What an annotation budget buys
    Budget(BudgetArgs),
    /// Check reference summaries against the annotation rules
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen for TCP connections instead of using stdin/stdout
    #[arg(long)]
    pub listen: Option<String>,
    /// Seconds of inactivity before a session is ended automatically
    #[arg(long)]
    pub idle_timeout: Option<f64>,
    /// Seconds allowed for one summary, retries included
    #[arg(long)]
    pub summary_timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// JSON-lines corpus file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Machine-readable output
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimFormat {
    /// Replayable utterance/end_of_conversation events
    Events,
    /// Corpus records with extractive draft summaries
    Corpus,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Source text files (stdin when omitted)
    pub inputs: Vec<PathBuf>,
    /// Treat every non-empty line as its own document
    #[arg(long)]
    pub per_line: bool,
    #[arg(long, value_enum, default_value = "events")]
    pub format: SimFormat,
    /// Output file (stdout when omitted)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub p_repeat: Option<f64>,
    #[arg(long)]
    pub p_filler: Option<f64>,
    /// Candidate utterance lengths in words (repeatable)
    #[arg(long = "avg-length")]
    pub avg_lengths: Vec<usize>,
    /// File with one filler word per line
    #[arg(long)]
    pub fillers: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Budget in dollars (repeatable)
    #[arg(long = "budget")]
    pub budgets: Vec<f64>,
    /// Fraction of each budget spent on human summaries in the two-step plan
    #[arg(long, default_value_t = DEFAULT_HUMAN_SHARE)]
    pub human_share: f64,
    #[arg(long)]
    pub human_rate: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// File with one entity per line that summaries must keep
    #[arg(long)]
    pub entities: Option<PathBuf>,
}

/// Configuration after merging the file (if any) with flags.
pub fn resolve_config(global: &GlobalArgs) -> Result<FileConfig> {
    let mut cfg = match &global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = global.n_max {
        cfg.window.n_max = n;
    }
    if let Some(t) = global.t_max {
        cfg.window.t_max = t;
    }
    cfg.window.validate()?;
    if let Some(kind) = &global.backend {
        cfg.backend.kind = kind.parse::<BackendKind>().map_err(anyhow::Error::msg)?;
    }
    if let Some(endpoint) = &global.endpoint {
        cfg.backend.endpoint = Some(endpoint.clone());
    }
    if let Some(seed) = global.seed {
        cfg.seed = Some(seed);
    }
    if let Some(seed) = cfg.seed {
        cfg.simulate.seed = seed;
    }
    if let Some(scope) = &global.scope {
        cfg.scope = scope.parse::<ScopeFilter>().map_err(anyhow::Error::msg)?;
    }
    if let Some(t) = global.short_threshold {
        cfg.short_threshold = t;
    }
    Ok(cfg)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

pub async fn serve(cfg: &FileConfig, args: &ServeArgs) -> Result<()> {
    let backend = build_backend(&cfg.backend)?;
    let serve_cfg = ServeConfig {
        policy: cfg.window,
        idle_timeout: args.idle_timeout.unwrap_or(cfg.serve.idle_timeout),
        summary_timeout: args.summary_timeout.unwrap_or(cfg.serve.summary_timeout),
        max_in_flight: cfg.serve.max_in_flight,
    };
    match args.listen.as_ref().or(cfg.serve.listen.as_ref()) {
        Some(addr) => {
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            serve_tcp(Hub::new(serve_cfg, backend), listener).await?;
        }
        None => {
            info!(n_max = serve_cfg.policy.n_max, t_max = serve_cfg.policy.t_max, "serving on stdio");
            run_serve(serve_cfg, backend, tokio::io::stdin(), tokio::io::stdout()).await?;
        }
    }
    Ok(())
}

/// Summarizes the admitted test samples concurrently and scores them.
pub async fn run_evaluate(
    samples: &[CorpusSample],
    backend: Arc<dyn Summarizer>,
    filter: ScopeFilter,
) -> Result<EvaluationReport> {
    let selected = test_samples(samples, filter);
    let mut tasks = JoinSet::new();
    for (i, s) in selected.iter().enumerate() {
        let backend = Arc::clone(&backend);
        let task = SummarizeTask::new(s.scope, s.transcript.clone());
        tasks.spawn(async move { (i, backend.summarize(&task).await) });
    }
    let mut candidates: Vec<Result<String, BackendError>> = vec![Err(BackendError::EmptyResponse); selected.len()];
    while let Some(joined) = tasks.join_next().await {
        let (i, result) = joined?;
        candidates[i] = result;
    }
    Ok(score_candidates(&selected, &candidates)?)
}

async fn evaluate(cfg: &FileConfig, args: &EvaluateArgs) -> Result<()> {
    let samples = load_corpus(&args.corpus.corpus)?;
    let backend = build_backend(&cfg.backend)?;
    let report = run_evaluate(&samples, backend, cfg.scope).await?;
    if args.corpus.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.render_table());
    }
    Ok(())
}

fn simulate(cfg: &FileConfig, args: &SimulateArgs) -> Result<()> {
    let mut sim = cfg.simulate.clone();
    if let Some(p) = args.p_repeat {
        sim.p_repeat = p;
    }
    if let Some(p) = args.p_filler {
        sim.p_filler = p;
    }
    if !args.avg_lengths.is_empty() {
        sim.avg_lengths = args.avg_lengths.clone();
    }
    if let Some(path) = &args.fillers {
        sim.fillers = read_lines(path)?;
    }
    sim.validate()?;

    let mut documents: Vec<(String, String)> = Vec::new();
    let mut add = |name: String, text: String| {
        if args.per_line {
            for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
                documents.push((format!("{name}-{i:04}"), line.to_owned()));
            }
        } else {
            documents.push((name, text));
        }
    };
    if args.inputs.is_empty() {
        let mut text = String::new();
        for line in io::stdin().lock().lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        add("doc".into(), text);
    } else {
        for path in &args.inputs {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "doc".into());
            add(stem, text);
        }
    }

    let mut out = open_output(args.output.as_deref())?;
    for (index, (name, text)) in documents.iter().enumerate() {
        let doc_cfg = rtsum_core::simulate::SimConfig {
            seed: sim.seed.wrapping_add(index as u64),
            ..sim.clone()
        };
        let conv = match simulate_conversation(name, text, &doc_cfg) {
            Ok(c) => c,
            Err(rtsum_core::simulate::SimError::EmptySource) => {
                tracing::warn!(document = %name, "skipping document without tokens");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match args.format {
            SimFormat::Events => write_events(&conv, &mut out)?,
            SimFormat::Corpus => {
                let samples = draft_samples(&conv, cfg.window, split_for_index(index))?;
                write_samples(&samples, &mut out)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes a conversation as inbound wire events, ending with `end_of_conversation`.
pub fn write_events(conv: &Conversation, out: &mut dyn Write) -> io::Result<()> {
    for u in &conv.utterances {
        let event = WireEvent::Utterance {
            session: conv.id.clone(),
            utterance: u.clone(),
        };
        writeln!(out, "{}", encode_event(&event))?;
    }
    let end = WireEvent::EndOfConversation {
        session: conv.id.clone(),
    };
    writeln!(out, "{}", encode_event(&end))
}

fn stats(args: &CorpusArgs) -> Result<()> {
    let samples = load_corpus(&args.corpus)?;
    let stats = corpus_stats(&samples);
    if args.json {
        let body = serde_json::json!({
            "cells": stats.records(),
            "total": stats.total(),
        });
        println!("{}", serde_json::to_string_pretty(&body)?);
    } else {
        print!("{}", stats.render_table());
    }
    Ok(())
}

fn budget(cfg: &FileConfig, args: &BudgetArgs) -> Result<()> {
    let mut rates = cfg.rates;
    if let Some(r) = args.human_rate {
        rates.human_rate = r;
    }
    let budgets = if args.budgets.is_empty() {
        vec![2.5, 5.0]
    } else {
        args.budgets.clone()
    };
    let plans = budgets
        .iter()
        .map(|&b| plan_two_step(b, args.human_share, &rates))
        .collect::<Result<Vec<_>, _>>()?;
    if args.json {
        let rows: Vec<_> = budgets
            .iter()
            .zip(&plans)
            .map(|(&b, plan)| {
                Ok(serde_json::json!({
                    "budget": b,
                    "human": rtsum_core::budget::summaries_for_budget(b, rtsum_core::budget::Method::Human, &rates)?,
                    "gpt": rtsum_core::budget::summaries_for_budget(b, rtsum_core::budget::Method::Gpt, &rates)?,
                    "two_step": plan,
                }))
            })
            .collect::<Result<_, rtsum_core::budget::BudgetError>>()?;
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(());
    }
    print!("{}", render_budget_table(&budgets, &rates)?);
    println!("two-step plans ({:.0}% of budget to human summaries):", args.human_share * 100.0);
    for plan in plans {
        println!(
            "  ${}: {} gpt -> {} human (residual ${:.5})",
            plan.budget, plan.gpt_count, plan.human_count, plan.residual
        );
    }
    Ok(())
}

/// Returns the number of samples with at least one violation.
fn validate(cfg: &FileConfig, args: &ValidateArgs) -> Result<usize> {
    let samples = load_corpus(&args.corpus.corpus)?;
    let opts = GuidelineOptions {
        short_threshold: cfg.short_threshold,
        entities: match &args.entities {
            Some(p) => read_lines(p)?,
            None => Vec::new(),
        },
    };
    let mut failing = 0;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for s in &samples {
        let report = validate_sample(s, &opts);
        if !report.passes() {
            failing += 1;
        }
        if args.corpus.json {
            writeln!(out, "{}", serde_json::json!({"id": s.id, "report": report}))?;
        } else if !report.passes() {
            for f in &report.findings {
                writeln!(out, "{}: {f}", s.id)?;
            }
        }
    }
    if !args.corpus.json {
        writeln!(
            out,
            "{} of {} sample(s) violate the guidelines (short threshold {} tokens)",
            failing,
            samples.len(),
            opts.short_threshold
        )?;
    }
    Ok(failing)
}

pub async fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Serve(args) => serve(&cfg, args).await,
        Command::Evaluate(args) => evaluate(&cfg, args).await,
        Command::Simulate(args) => simulate(&cfg, args),
        Command::Stats(args) => stats(args),
        Command::Budget(args) => budget(&cfg, args),
        Command::Validate(args) => {
            let failing = validate(&cfg, args)?;
            if failing > 0 {
                bail!("{failing} sample(s) failed validation");
            }
            Ok(())
        }
    }
}
