//! `routerlab` command line: validate, sweep, build, synth, metrics.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;

use crate::cascade::{CascadeConfig, VotingScheme, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, EvaluationRequest, Policy};
use crate::grid::{default_taus, parse_tau_grid};
use crate::io::{
    load_dataset, load_pricing, read_curve, read_jsonl, write_curve, write_dataset, write_jsonl,
    write_latency, write_metrics,
};
use crate::metrics::{curve_toa, togr, MetricMode, RANDOM_TOA};
use crate::model::PricingSchedule;
use crate::pre_router::ScoreSource;
use crate::synth::{
    generate_synthetic, generate_synthetic_corpus, CorpusProfile, DifficultyProfile, SampleSchedule,
};
use crate::trainset::{
    build_dpo_pairs, refusal_set_for, CorpusQuestion, PairOptions, TrainingConfig,
    DEFAULT_MIN_RATIO,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "routerlab", version, about = "Replay SLM/LLM routing policies and score their cost-performance curves")]
pub struct Cli {
    /// Worker threads for sweeps (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a question file and report the first bad line.
    Validate { path: PathBuf },
    /// Sweep a routing policy over thresholds and write curve.csv, golden.csv, metrics.json.
    Sweep(SweepArgs),
    /// Build fine-tuning data (preference pairs or refusal examples) from a corpus.
    Build(BuildArgs),
    /// Generate a seeded synthetic question file or training corpus.
    Synth(SynthArgs),
    /// Recompute ToA/ToGA (and ToGR with --golden) from curve CSVs.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    Pre,
    Cascade,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub mode: SweepMode,
    #[arg(long)]
    pub input: PathBuf,
    /// Pricing JSON overriding the built-in schedule.
    #[arg(long)]
    pub pricing: Option<PathBuf>,
    #[arg(long, default_value = "fcv")]
    pub scheme: VotingScheme,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Threshold grid as start:end:step.
    #[arg(long)]
    pub taus: Option<String>,
    /// Threshold at which the headline AGL/AROL are reported.
    #[arg(long, default_value_t = 0.6)]
    pub tau: f64,
    #[arg(long, default_value = "pre")]
    pub score_source: ScoreSource,
    /// Treat the LLM as always correct.
    #[arg(long)]
    pub assume_perfect: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuildKind {
    Dpo,
    Refusal,
}

#[derive(Debug, clap::Args)]
pub struct BuildArgs {
    #[arg(value_enum)]
    pub kind: BuildKind,
    /// Corpus JSONL: {"id", "question", "samples": [{"text", "correct", "tokens"}]}.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "RL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_RATIO)]
    pub min_ratio: f64,
    /// Add a pair against the longest correct response (ablation).
    #[arg(long)]
    pub correct_negatives: bool,
    /// Also write the fine-tuning hyperparameters as JSON.
    #[arg(long)]
    pub emit_config: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long, env = "RL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Generator parameters as JSON; missing fields take their defaults.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub schedule: Option<SampleSchedule>,
    /// Emit a text corpus for `build` instead of a question file.
    #[arg(long)]
    pub corpus: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub golden: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CurveMetrics {
    toa: f64,
    toga: f64,
    togr: Option<f64>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. } => EXIT_USAGE,
        _ => EXIT_INVALID,
    }
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::param("jobs", "must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            warn!("worker pool already configured: {e}");
        }
    }
    match cli.command {
        Command::Validate { path } => {
            let ds = load_dataset(&path)?;
            println!("{}: {} questions ok", path.display(), ds.len());
            Ok(())
        }
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Build(args) => cmd_build(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Metrics(args) => cmd_metrics(&args),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let taus = match &args.taus {
        Some(grid) => parse_tau_grid(grid)?,
        None => default_taus(),
    };
    let pricing = match &args.pricing {
        Some(p) => load_pricing(p)?,
        None => PricingSchedule::default(),
    };
    let policy = match args.mode {
        SweepMode::Pre => Policy::Pre(args.score_source),
        SweepMode::Cascade => Policy::Cascade(CascadeConfig {
            scheme: args.scheme,
            k: args.k,
            alpha: args.alpha,
        }),
    };
    let mode = if args.assume_perfect {
        MetricMode::Perfect
    } else {
        MetricMode::Actual
    };
    let dataset = load_dataset(&args.input)?;
    let eval = evaluate(
        &dataset,
        &EvaluationRequest {
            policy,
            taus,
            pricing,
            mode,
            latency_tau: args.tau,
        },
    )?;
    create_dir(&args.out)?;
    write_curve(&eval.curve, args.out.join("curve.csv"))?;
    write_curve(&eval.golden, args.out.join("golden.csv"))?;
    write_metrics(&eval.report, args.out.join("metrics.json"))?;
    if !eval.latency.is_empty() {
        write_latency(&eval.latency, args.out.join("latency.csv"))?;
    }
    println!("{}", serde_json::to_string(&eval.report)?);
    Ok(())
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    if !(args.min_ratio.is_finite() && args.min_ratio > 0.0) {
        return Err(Error::param("min-ratio", "must be positive"));
    }
    let corpus: Vec<CorpusQuestion> = read_jsonl(&args.input)?;
    for q in &corpus {
        q.validate()?;
    }
    let mut skipped = 0usize;
    let emitted = match args.kind {
        BuildKind::Dpo => {
            let opts = PairOptions {
                min_ratio: args.min_ratio,
                correct_negatives: args.correct_negatives,
            };
            let mut pairs = Vec::new();
            for q in &corpus {
                let built = build_dpo_pairs(q, &opts);
                if built.is_empty() {
                    skipped += 1;
                }
                pairs.extend(built);
            }
            write_jsonl(&args.out, &pairs)?;
            pairs.len()
        }
        BuildKind::Refusal => {
            let mut examples = Vec::new();
            for q in &corpus {
                match refusal_set_for(q, args.seed) {
                    Ok(set) => examples.extend(set),
                    Err(e) => {
                        warn!("skipping: {e}");
                        skipped += 1;
                    }
                }
            }
            write_jsonl(&args.out, &examples)?;
            examples.len()
        }
    };
    if let Some(path) = &args.emit_config {
        let text = serde_json::to_string_pretty(&TrainingConfig::default())?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
    }
    eprintln!("emitted {emitted}, skipped {skipped}");
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.corpus {
        let profile: CorpusProfile = match &args.params {
            Some(p) => read_json(p)?,
            None => CorpusProfile::default(),
        };
        let corpus = generate_synthetic_corpus(args.seed, args.n, &profile)?;
        write_jsonl(&args.out, &corpus)?;
    } else {
        let mut profile: DifficultyProfile = match &args.params {
            Some(p) => read_json(p)?,
            None => DifficultyProfile::default(),
        };
        if let Some(s) = args.schedule {
            profile.schedule = s;
        }
        let questions = generate_synthetic(args.seed, args.n, &profile)?;
        write_dataset(&args.out, &questions)?;
    }
    eprintln!("wrote {} records to {}", args.n, args.out.display());
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let curve = read_curve(&args.curve)?;
    let toa = curve_toa(&curve)?;
    let togr = match &args.golden {
        Some(g) => Some(togr(&curve, &read_curve(g)?)?),
        None => None,
    };
    let out = CurveMetrics {
        toa,
        toga: toa - RANDOM_TOA,
        togr,
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}
