use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use puppet_audit::analysis::{analyze, AnalysisError, AnalyzeOptions, ReportTable, Slice};
use puppet_audit::config::{load_spec, ConfigError, RunSpec};
use puppet_audit::report::{render_csv, render_markdown, render_text};
use puppet_audit::run::{load_run, run, RunError};
use puppet_audit::stats::{Characteristic, CiMethod, StatsError};
use puppet_audit::{Group, SimWorld, WorldParams};
use serde_json::json;

const REPORT_JSON: &str = "report.json";
const REPORT_CSV: &str = "report.csv";
const REPORT_MD: &str = "report.md";

#[derive(Parser)]
#[command(
    name = "puppet-audit",
    version,
    about = "Sock-puppet audits of a simulated recommendation platform"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulated worlds.
    World {
        #[command(subcommand)]
        command: WorldCommand,
    },
    /// Crawl both configurations and persist trees and a manifest.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the experiment rng seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute effect sizes from a run directory.
    Analyze(AnalyzeArgs),
    /// Render a previously computed report.
    Report {
        /// Run directory holding report.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Check an experiment file and print it with defaults applied.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Subcommand)]
enum WorldCommand {
    /// Write the catalog of a world as JSON.
    Gen {
        /// Take world parameters and seed from this experiment file.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
    /// Bootstrap seed; defaults to the run's rng seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Defaults to the run's configured count.
    #[arg(long)]
    resamples: Option<usize>,
    /// Split each group into two disjoint halves.
    #[arg(long, overrides_with = "no_split")]
    split: bool,
    #[arg(long = "no-split")]
    no_split: bool,
    #[arg(long, value_enum, default_value_t = CharArg::All)]
    characteristic: CharArg,
    #[arg(long, value_enum, default_value_t = SliceArg::None)]
    slice: SliceArg,
    /// Bias-corrected and accelerated intervals instead of percentile.
    #[arg(long)]
    bca: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CharArg {
    Pop,
    Div,
    Sem,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum SliceArg {
    None,
    Breadth,
    Depth,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Text,
    Csv,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
    Insufficient(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Insufficient(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) | Failure::Insufficient(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
            RunError::Orchestrator(puppet_audit::orchestrator::OrchestratorError::Invalid {
                ..
            }) => Failure::Validation(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InsufficientTrees { .. }
            | AnalysisError::Stats(StatsError::TooFewTrees(_)) => Failure::Insufficient(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn world_gen(spec: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let (params, spec_seed) = match spec {
        Some(p) => {
            let s: RunSpec = load_spec(p)?;
            (s.experiment.world, s.experiment.world_seed)
        }
        None => (WorldParams::default(), 0),
    };
    let seed = seed.unwrap_or(spec_seed);
    let world = SimWorld::new(&params, seed).map_err(|e| Failure::Validation(e.into()))?;
    let videos: Vec<_> = world
        .catalog()
        .iter()
        .map(|v| {
            json!({
                "video_id": v.video_id,
                "channel_id": v.channel_id,
                "views": v.views,
                "duration_s": v.duration_s,
                "title": v.title,
            })
        })
        .collect();
    let doc = json!({ "seed": seed, "params": params, "videos": videos });
    let text = serde_json::to_string_pretty(&doc).context("serializing world")?;
    match out {
        Some(p) => write(p, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_cmd(spec: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = load_spec(spec)?;
    if let Some(s) = seed {
        spec.experiment.rng_seed = s;
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = run(&spec, out)?;
    for g in [Group::A, Group::B] {
        let complete = manifest.count(g, puppet_audit::orchestrator::TreeStatus::Complete);
        let total = manifest.entries(g).count();
        println!("group {}: {complete}/{total} complete trees", g.tag());
    }
    for t in manifest.trees.iter().filter(|t| !t.failures.is_empty()) {
        for f in &t.failures {
            eprintln!("warning: {}: {f}", t.file);
        }
    }
    println!("spec hash {}", manifest.spec_hash);
    Ok(())
}

fn analyze_cmd(args: &AnalyzeArgs) -> Result<(), Failure> {
    let loaded = load_run(&args.out)?;
    let mut opts = AnalyzeOptions::new(
        args.resamples.unwrap_or(loaded.spec.resamples),
        args.seed.unwrap_or(loaded.spec.experiment.rng_seed),
    );
    opts.characteristics = match args.characteristic {
        CharArg::Pop => vec![Characteristic::Pop],
        CharArg::Div => vec![Characteristic::Div],
        CharArg::Sem => vec![Characteristic::Sem],
        CharArg::All => Characteristic::ALL.to_vec(),
    };
    opts.split = args.split && !args.no_split;
    opts.slice = match args.slice {
        SliceArg::None => Slice::None,
        SliceArg::Breadth => Slice::Breadth,
        SliceArg::Depth => Slice::Depth,
    };
    if args.bca {
        opts.method = CiMethod::Bca;
    }
    if opts.resamples < puppet_audit::stats::MIN_RESAMPLES {
        return Err(Failure::Validation(anyhow::anyhow!(
            "--resamples must be at least {}",
            puppet_audit::stats::MIN_RESAMPLES
        )));
    }
    let table = analyze(&loaded, &opts)?;
    let json = serde_json::to_string_pretty(&table).context("serializing report")?;
    write(&args.out.join(REPORT_JSON), &json)?;
    write(
        &args.out.join(REPORT_CSV),
        &render_csv(&table).context("rendering csv")?,
    )?;
    let md = render_markdown(&table);
    write(&args.out.join(REPORT_MD), &md)?;
    print!("{md}");
    Ok(())
}

fn report_cmd(out: &Path, format: Format) -> Result<(), Failure> {
    let path = out.join(REPORT_JSON);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let table: ReportTable = serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(anyhow::anyhow!("{}: {e}", path.display())))?;
    let rendered = match format {
        Format::Markdown => render_markdown(&table),
        Format::Text => render_text(&table),
        Format::Csv => render_csv(&table).context("rendering csv")?,
    };
    print!("{rendered}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::World {
            command: WorldCommand::Gen { spec, seed, out },
        } => world_gen(spec.as_deref(), *seed, out.as_deref()),
        Command::Run { spec, out, seed } => run_cmd(spec, out, *seed),
        Command::Analyze(args) => analyze_cmd(args),
        Command::Report { out, format } => report_cmd(out, *format),
        Command::Validate { spec } => load_spec(spec)
            .map_err(Failure::from)
            .map(|s| println!("{}", s.canonical_json())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
