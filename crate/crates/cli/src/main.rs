use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chatlogic::bench::{
    emit_report, generate_instances, run_ablation, run_experiment, write_reports, DatasetName, DatasetSpec,
    ReportFormat, RunOptions, Sampling, Variant,
};
use chatlogic::cwa::supplement;
use chatlogic::dsl::{format_program, parse_program, render_diagnostics};
use chatlogic::llm::BackendKind;
use chatlogic::logic::evaluate;
use chatlogic::nl::{Instance, Lexicon, NlFrontend, Pattern};
use chatlogic::pipeline::{Ablation, Outcome, Pipeline, PipelineConfig};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "chatlogic", version, about = "Deductive reasoning over natural-language rule bases")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Skip closed-world supplementation.
    #[arg(long, global = true)]
    no_cwa: bool,
    /// Extra lexicon entries for the sentence grammar.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate an instance file (JSON) to the logic DSL.
    Translate {
        instance: PathBuf,
        /// Go through the configured backend and correction loops instead of the oracle.
        #[arg(long)]
        llm: bool,
        /// Print the full translation trace as JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Parse a program and answer its query.
    Eval { program: PathBuf },
    /// Run the pipeline over a dataset sample.
    Run {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = parse_ablation)]
        ablation: Option<Ablation>,
    },
    /// Run base, se and se-syn over the same sample.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print generated instances as JSON lines.
    Gen {
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "people", value_parser = kebab::<Pattern>)]
        pattern: Pattern,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "generated", value_parser = kebab::<DatasetName>)]
    dataset: DatasetName,
    /// Corpus directory; not needed for generated data.
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long, value_parser = kebab::<Variant>)]
    variant: Option<Variant>,
    #[arg(long, value_parser = kebab::<BackendKind>)]
    backend: Option<BackendKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    sample_size: usize,
    /// Comma-separated depths, e.g. 2,3,4,5.
    #[arg(long, value_delimiter = ',')]
    depth: Vec<u32>,
    #[arg(long, value_parser = kebab::<Sampling>)]
    sampling: Option<Sampling>,
    #[arg(long)]
    threads: Option<usize>,
    /// Run directory for reports and traces.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "md", value_parser = parse_format)]
    format: ReportFormat,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    Ablation::parse(s).ok_or_else(|| format!("unknown ablation {s:?}; expected base, se or se-syn"))
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    ReportFormat::parse(s).ok_or_else(|| format!("unknown format {s:?}; expected json, csv or md"))
}

fn frontend(cli: &Cli) -> Result<NlFrontend> {
    Ok(match &cli.lexicon {
        Some(path) => NlFrontend::new(Lexicon::load(path).with_context(|| format!("loading {}", path.display()))?),
        None => NlFrontend::default(),
    })
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config: PipelineConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if cli.no_cwa {
        config.cwa_enabled = false;
    }
    Ok(config)
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn translate(cli: &Cli, path: &Path, llm: bool, trace: bool) -> Result<ExitCode> {
    let instance = read_instance(path)?;
    let frontend = frontend(cli)?;
    let mut config = config(cli)?;
    if !llm {
        let program = frontend.translate_instance(&instance)?;
        let program = if config.cwa_enabled { supplement(&program) } else { program };
        print!("{}", format_program(&program).text);
        return Ok(ExitCode::SUCCESS);
    }
    if config.backend.kind != BackendKind::Live && cli.config.is_none() {
        config.backend.kind = BackendKind::PerfectMock;
    }
    let pipeline = Pipeline::new(config, frontend)?;
    let out = pipeline.run_instance(&instance);
    if trace {
        println!("{}", serde_json::to_string_pretty(&out.trace)?);
    } else if let Some(program) = &out.trace.final_program {
        print!("{program}");
    }
    Ok(match out.outcome {
        Outcome::Answer { .. } => ExitCode::SUCCESS,
        Outcome::Failure(f) => {
            eprintln!("{}: {}", f.kind.as_str(), f.detail);
            ExitCode::from(1)
        }
    })
}

fn eval(path: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let program = match parse_program(&text) {
        Ok(p) => p,
        Err(diagnostics) => {
            eprintln!("{}", render_diagnostics(&diagnostics));
            return Ok(ExitCode::from(1));
        }
    };
    let model = evaluate(&program)?;
    let query = program.query();
    let value = model.holds(query);
    match model.depth(query) {
        Some(depth) => println!("{} (depth {depth})", if value { "TRUE" } else { "FALSE" }),
        None => println!("{}", if value { "TRUE" } else { "FALSE" }),
    }
    Ok(ExitCode::SUCCESS)
}

fn dataset_spec(args: &RunArgs) -> DatasetSpec {
    let depth_filter = if args.depth.is_empty() {
        (args.dataset.by_depth()).then(|| (2..=5).collect::<BTreeSet<u32>>())
    } else {
        Some(args.depth.iter().copied().collect())
    };
    DatasetSpec {
        name: args.dataset,
        variant: args.variant.unwrap_or(Variant::NotApplicable),
        path: args.path.clone(),
        sample_size: args.sample_size,
        seed: args.seed,
        depth_filter,
        sampling: args.sampling.unwrap_or(Sampling::Stratified),
    }
}

fn run(cli: &Cli, args: &RunArgs, ablation: Option<Option<Ablation>>) -> Result<ExitCode> {
    let mut config = config(cli)?;
    if let Some(kind) = args.backend {
        config.backend.kind = kind;
    }
    if let Some(Some(ablation)) = ablation {
        config.ablation = ablation;
    }
    let spec = dataset_spec(args);
    let run_id = format!("{}-{}", spec.name.as_str(), spec.seed);
    let options = RunOptions {
        threads: args.threads,
        trace_dir: args.out.as_ref().map(|d| d.join("traces")),
        run_id,
        frontend: frontend(cli)?,
    };
    let report = match ablation {
        Some(_) => run_experiment(&spec, &config, &options)?,
        None => run_ablation(&spec, &config, &options)?,
    };
    if let Some(dir) = &args.out {
        write_reports(dir, &report).with_context(|| format!("writing {}", dir.display()))?;
        eprintln!("wrote {}", dir.display());
    }
    print!("{}", emit_report(&report, args.format));
    Ok(ExitCode::SUCCESS)
}

fn gen(depth: u32, count: usize, seed: u64, pattern: Pattern) -> Result<ExitCode> {
    if !(2..=5).contains(&depth) {
        bail!("depth must lie in 2..=5, got {depth}");
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for inst in generate_instances(seed, count, depth, pattern) {
        writeln!(out, "{}", serde_json::to_string(&inst)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Translate { instance, llm, trace } => translate(&cli, instance, *llm, *trace),
        Command::Eval { program } => eval(program),
        Command::Run { run: args, ablation } => run(&cli, args, Some(*ablation)),
        Command::Ablate { run: args } => run(&cli, args, None),
        Command::Gen { depth, count, seed, pattern } => gen(*depth, *count, *seed, *pattern),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
