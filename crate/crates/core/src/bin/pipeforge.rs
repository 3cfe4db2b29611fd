// SPDX-License-Identifier: Apache-2.0

//! `pipeforge` command-line driver.
//!
//! Exit codes: 0 ok, 1 usage or I/O error, 2 LLM backend failure,
//! 3 evaluation budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use pipeforge::corpus::{evaluate_corpus, load_corpus};
use pipeforge::graph::{self, compile, InterpretOptions};
use pipeforge::layout::optimize_layout;
use pipeforge::llm::{backend_from_env, BackendKind, FewShotStore, GenerateError, GenerateOptions, Generator, PipelineTag};
use pipeforge::metric::{interactions_with, MetricError, MetricOptions};
use pipeforge::registry::{load_registry, Registry};
use pipeforge::service::{serve, ServiceConfig};

#[derive(Parser)]
#[command(name = "pipeforge", version, about = "Instruction-to-pipeline generation, compilation and evaluation")]
struct Cli {
    /// Node library JSON to use instead of the bundled one.
    #[arg(long, global = true, env = "PIPEFORGE_REGISTRY", value_name = "FILE")]
    registry: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Replay,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Http => BackendKind::Http,
            BackendArg::Replay => BackendKind::Replay,
        }
    }
}

#[derive(clap::Args)]
struct BackendOpts {
    /// LLM backend; defaults to $PIPEFORGE_LLM_BACKEND, then replay.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Directory of replay fixtures (<sha256 of prompt>.txt).
    #[arg(long, env = "PIPEFORGE_REPLAY_DIR", value_name = "DIR")]
    replay_dir: Option<PathBuf>,
    /// Few-shot example file replacing the bundled set.
    #[arg(long, value_name = "FILE")]
    fewshot: Option<PathBuf>,
    /// Per-stage timeout in seconds.
    #[arg(long, default_value_t = 60.0, value_name = "SECS")]
    stage_timeout: f64,
    /// Fail instead of falling back to tag-affinity nodes when the selector
    /// returns nothing.
    #[arg(long)]
    no_selector_fallback: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalFormat {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pipeline from an instruction.
    Generate {
        #[arg(long)]
        instruction: String,
        #[arg(long, value_parser = parse_tag)]
        tag: PipelineTag,
        #[command(flatten)]
        backend: BackendOpts,
        /// Write the pipeline JSON here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Print the full generation result as JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// Compile pseudocode to pipeline JSON.
    Compile {
        file: PathBuf,
        #[arg(long)]
        no_layout: bool,
        /// Drop nodes whose arguments reference undefined variables.
        #[arg(long)]
        strict: bool,
        /// Print the full compile report (graph, dropped lines, diagnostics).
        #[arg(long)]
        json: bool,
    },
    /// Count the interactions needed to turn generated pipelines into targets.
    Eval {
        #[arg(long, value_name = "FILE", requires = "target", conflicts_with = "corpus")]
        generated: Option<PathBuf>,
        #[arg(long, value_name = "FILE", requires = "generated")]
        target: Option<PathBuf>,
        #[arg(long, value_name = "FILE", required_unless_present = "generated")]
        corpus: Option<PathBuf>,
        /// Charge every removed edge separately when deleting a node.
        #[arg(long)]
        no_cascade: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: EvalFormat,
        /// Shorthand for --format json.
        #[arg(long)]
        json: bool,
        /// Also write the per-pair CSV to this file.
        #[arg(long, value_name = "FILE")]
        csv_out: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[command(flatten)]
        backend: BackendOpts,
        /// Append every generation to <DIR>/generations.jsonl.
        #[arg(long, value_name = "DIR")]
        save_dir: Option<PathBuf>,
        /// Concurrent evaluation requests.
        #[arg(long)]
        workers: Option<usize>,
        /// Allowed CORS origin.
        #[arg(long, env = "PIPEFORGE_CORS_ORIGIN")]
        cors_origin: Option<String>,
    },
}

fn parse_tag(s: &str) -> Result<PipelineTag, String> {
    s.parse().map_err(|e: pipeforge::llm::UnknownTag| e.to_string())
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Failure {
        Failure { code: 1, error }
    }
    fn backend(error: anyhow::Error) -> Failure {
        Failure { code: 2, error }
    }
    fn budget(error: anyhow::Error) -> Failure {
        Failure { code: 3, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::usage(error)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let mut command = Cli::command();
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        command = command.color(clap::ColorChoice::Never);
    }
    let cli = match command
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let registry = match &cli.registry {
        Some(path) => load_registry(path).with_context(|| format!("loading registry {}", path.display()))?,
        None => Registry::canonical(),
    };
    let registry = Arc::new(registry);
    match cli.command {
        Command::Generate {
            instruction,
            tag,
            backend,
            out,
            json,
        } => cmd_generate(registry, &instruction, tag, &backend, out.as_deref(), json),
        Command::Compile {
            file,
            no_layout,
            strict,
            json,
        } => cmd_compile(&registry, &file, !no_layout, strict, json),
        Command::Eval {
            generated,
            target,
            corpus,
            no_cascade,
            format,
            json,
            csv_out,
        } => {
            let options = MetricOptions {
                cascade: !no_cascade,
                ..MetricOptions::default()
            };
            let format = if json { EvalFormat::Json } else { format };
            match (generated, target, corpus) {
                (Some(g), Some(t), _) => cmd_eval_pair(&registry, &g, &t, options, format),
                (_, _, Some(c)) => cmd_eval_corpus(&registry, &c, options, format, csv_out.as_deref()),
                _ => Err(Failure::usage(anyhow!("pass --generated and --target, or --corpus"))),
            }
        }
        Command::Serve {
            host,
            port,
            backend,
            save_dir,
            workers,
            cors_origin,
        } => cmd_serve(registry, &host, port, &backend, save_dir, workers, cors_origin),
    }
}

fn build_generator(registry: Arc<Registry>, opts: &BackendOpts) -> Result<Generator, Failure> {
    let backend = backend_from_env(opts.backend.map(Into::into), opts.replay_dir.clone())
        .map_err(|e| Failure::backend(e.into()))?;
    let mut generator = Generator::new(registry, backend);
    if let Some(path) = &opts.fewshot {
        let store = FewShotStore::load(path).with_context(|| format!("loading {}", path.display()))?;
        store.check(generator.registry()).context("checking few-shot examples")?;
        generator = generator.with_fewshot(Arc::new(store));
    }
    if !(opts.stage_timeout.is_finite() && opts.stage_timeout > 0.0) {
        return Err(Failure::usage(anyhow!("--stage-timeout must be a positive number of seconds")));
    }
    Ok(generator.with_options(GenerateOptions {
        stage_timeout: Some(Duration::from_secs_f64(opts.stage_timeout)),
        selector_fallback: !opts.no_selector_fallback,
        ..GenerateOptions::default()
    }))
}

fn write_output(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_generate(
    registry: Arc<Registry>,
    instruction: &str,
    tag: PipelineTag,
    opts: &BackendOpts,
    out: Option<&Path>,
    json: bool,
) -> Outcome {
    let generator = build_generator(registry, opts)?;
    let result = generator.generate(instruction, tag).map_err(|e| match e {
        GenerateError::InvalidInstruction(_) => Failure::usage(e.into()),
        _ => Failure::backend(e.into()),
    })?;
    let pipeline = graph::to_json(&result.graph) + "\n";
    if let Some(path) = out {
        write_output(path, &pipeline)?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
        return Ok(());
    }
    let summary = {
        let mut s = format!("selected nodes: {}\n", result.selected_nodes.join(", "));
        s += &format!("dropped lines: {}\n", result.report.dropped_lines.len());
        for d in &result.report.dropped_lines {
            s += &format!("  line {}: {} ({})\n", d.line, d.node_id, d.reason);
        }
        s += &format!("graph: {} nodes, {} edges\n", result.graph.nodes.len(), result.graph.edge_count());
        s
    };
    match out {
        Some(path) => println!("{summary}written to {}", path.display()),
        None => {
            eprint!("{summary}");
            print!("{pipeline}");
        }
    }
    Ok(())
}

fn cmd_compile(registry: &Registry, file: &Path, layout: bool, strict: bool, json: bool) -> Outcome {
    let source = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let mut report = compile(&source, registry, InterpretOptions { strict });
    if report.graph.nodes.is_empty() {
        eprintln!("warning: {} contains no statements", file.display());
    }
    for d in &report.dropped_lines {
        eprintln!("warning: dropped line {} ({}): {}", d.line, d.node_id, d.reason);
    }
    for d in &report.diagnostics {
        eprintln!("warning: {d}");
    }
    if layout {
        report.graph = optimize_layout(&report.graph).expect("interpreter output is acyclic");
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("{}", graph::to_json(&report.graph));
    }
    Ok(())
}

fn metric_failure(e: MetricError) -> Failure {
    match e {
        MetricError::BudgetExceeded(_) => Failure::budget(e.into()),
        MetricError::InvalidGraph { .. } => Failure::usage(e.into()),
    }
}

fn read_graph(path: &Path) -> Result<graph::SerializedGraph, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(graph::from_json(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn cmd_eval_pair(
    registry: &Registry,
    generated: &Path,
    target: &Path,
    options: MetricOptions,
    format: EvalFormat,
) -> Outcome {
    let report = interactions_with(&read_graph(generated)?, &read_graph(target)?, registry, options)
        .map_err(metric_failure)?;
    match format {
        EvalFormat::Json => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
        EvalFormat::Csv => print!("count,from_scratch,ratio\n{},{},{:.4}\n", report.count, report.from_scratch, report.ratio),
        EvalFormat::Table => {
            println!(
                "interactions: {} of {} from scratch (ratio {:.1}%)",
                report.count,
                report.from_scratch,
                report.ratio * 100.0
            );
            for op in &report.script {
                println!("  {}", serde_json::to_string(op).expect("op serializes"));
            }
        }
    }
    Ok(())
}

fn cmd_eval_corpus(
    registry: &Registry,
    corpus: &Path,
    options: MetricOptions,
    format: EvalFormat,
    csv_out: Option<&Path>,
) -> Outcome {
    let entries = load_corpus(corpus).with_context(|| format!("loading corpus {}", corpus.display()))?;
    let report = evaluate_corpus(&entries, registry, options).map_err(|e| {
        if e.is_budget() {
            Failure::budget(e.into())
        } else {
            Failure::usage(e.into())
        }
    })?;
    if let Some(path) = csv_out {
        write_output(path, &report.pairs_csv())?;
    }
    match format {
        EvalFormat::Json => println!("{}", report.to_json()),
        EvalFormat::Csv => print!("{}\n{}", report.pairs_csv(), report.summary_csv()),
        EvalFormat::Table => print!("{}\n{}", report.pairs_csv(), report.table()),
    }
    Ok(())
}

fn cmd_serve(
    registry: Arc<Registry>,
    host: &str,
    port: u16,
    opts: &BackendOpts,
    save_dir: Option<PathBuf>,
    workers: Option<usize>,
    cors_origin: Option<String>,
) -> Outcome {
    let generator = build_generator(registry, opts)?;
    log::info!("LLM backend: {}", generator.backend_identity());
    let mut config = ServiceConfig::new(generator);
    config.save_dir = save_dir;
    config.cors_origin = cors_origin;
    if let Some(w) = workers {
        config.workers = w;
    }
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        let addr = listener.local_addr().context("reading bound address")?;
        eprintln!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            eprintln!("shutting down");
        };
        serve(listener, config, shutdown).await.context("serving")?;
        Ok(())
    })
}
