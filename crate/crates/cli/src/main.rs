use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exrec::augment::AugmentPolicy;
use exrec::domain::Limb;
use exrec::Error;

mod commands;
mod config;

use config::RunConfig;

/// Exercise recognition from a single wrist or ankle accelerometer.
#[derive(Debug, Parser)]
#[command(name = "exrec", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (required here or in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Restrict to one limb (default: both).
    #[arg(long, global = true, value_parser = parse_limb)]
    limb: Option<Limb>,
    /// Train without augmented windows.
    #[arg(long, global = true)]
    no_augment: bool,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Wide sensor CSVs, window dumps, or directories of either.
    #[arg(long = "input", short)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cohort in the wide CSV layout.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        /// Class count including Null.
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        seconds_per_class: Option<f64>,
    },
    /// Window, fuse, augment and export the feature matrix.
    Extract(Inputs),
    /// Subject-grouped cross-validation per limb.
    Evaluate(Inputs),
    /// Fit a deployable model per limb on all inputs.
    Train(Inputs),
    /// Classify windows with a trained model.
    Predict {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn parse_limb(s: &str) -> Result<Limb, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Invariant(_) => 4,
        Error::Validation { .. }
        | Error::Schema(_)
        | Error::Parse { .. }
        | Error::InsufficientData(_)
        | Error::Io { .. }
        | Error::Csv(_)
        | Error::Json(_) => 3,
    }
}

fn configure(cli: &Cli) -> exrec::Result<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    if c.limb.is_some() {
        cfg.limb = c.limb;
    }
    if c.no_augment {
        cfg.augmentation = AugmentPolicy::none();
    }
    if c.output_dir.is_some() {
        cfg.output_dir = c.output_dir.clone();
    }
    match &cli.command {
        Command::Synth {
            subjects,
            classes,
            seconds_per_class,
        } => {
            if let Some(n) = subjects {
                cfg.synth.n_subjects = *n;
            }
            if let Some(n) = classes {
                cfg.synth.n_classes = *n;
            }
            if let Some(s) = seconds_per_class {
                cfg.synth.seconds_per_class = *s;
            }
        }
        Command::Extract(i) | Command::Evaluate(i) | Command::Train(i) | Command::Predict { inputs: i, .. } => {
            if !i.inputs.is_empty() {
                cfg.inputs = i.inputs.clone();
            }
        }
    }
    if let Command::Predict { model: Some(m), .. } = &cli.command {
        cfg.model = Some(m.clone());
    }
    cfg.seed()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> exrec::Result<()> {
    let cfg = configure(cli)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    match &cli.command {
        Command::Synth { .. } => commands::synth(&cfg),
        Command::Extract(_) => commands::extract(&cfg),
        Command::Evaluate(_) => commands::evaluate(&cfg),
        Command::Train(_) => commands::train(&cfg),
        Command::Predict { .. } => commands::predict(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
