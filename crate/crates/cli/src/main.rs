use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod manifest;

use config::{EvalPart, FeatureSource, ModelKind, RunConfig, SplitMethod};
use error::CliError;

/// Synthetic VQA corpora, grounding evaluation and VGR corollary checks.
#[derive(Parser)]
#[command(name = "vgr", version)]
struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; also where upstream artifacts are read from.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes, questions and the ontology.
    Gen {
        /// Number of scenes to generate.
        #[arg(long)]
        scenes: Option<usize>,
    },
    /// Partition questions into train/dev/id-test/ood-test.
    Split {
        #[arg(long, value_enum)]
        method: Option<SplitMethod>,
    },
    /// Build AUG-ID and AUG-OOD from the held-out questions.
    Augment {
        #[arg(long, value_enum)]
        base_features: Option<FeatureSource>,
    },
    /// Fit a model and write a checkpoint.
    Train {
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        #[arg(long, value_enum)]
        train_features: Option<FeatureSource>,
        /// Linear model training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Linear model learning rate.
        #[arg(long)]
        lr: Option<f64>,
        /// Rule model similarity threshold.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// FPVG evaluation of the trained model.
    Evaluate {
        #[arg(long, value_enum)]
        part: Option<EvalPart>,
        /// Feature source for dev/id-test/ood-test; AUG parts use the augment base features.
        #[arg(long, value_enum)]
        features: Option<FeatureSource>,
    },
    /// Corollary verdicts for a grounding report.
    CheckVgr {
        /// Report to check; defaults to `report.json` in the output directory.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Corollary verdicts for the published result tables.
    Fixtures {
        /// Directory holding replacement fixture tables.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Full DET-vs-INF comparison.
    Reproduce,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    match &cli.command {
        Command::Gen { scenes: Some(n) } => cfg.corpus.n_scenes = *n,
        Command::Split { method: Some(m) } => cfg.split.method = *m,
        Command::Augment {
            base_features: Some(b),
        } => cfg.augment.base_features = *b,
        Command::Train {
            model,
            train_features,
            epochs,
            lr,
            tau,
        } => {
            if let Some(m) = model {
                cfg.model.kind = *m;
            }
            if let Some(f) = train_features {
                cfg.model.train_features = *f;
            }
            if let Some(e) = epochs {
                cfg.model.linear.epochs = *e;
            }
            if let Some(l) = lr {
                cfg.model.linear.lr = *l;
            }
            if let Some(t) = tau {
                cfg.model.tau = *t;
            }
        }
        Command::Evaluate { part, features } => {
            if let Some(p) = part {
                cfg.evaluate.part = *p;
            }
            if let Some(f) = features {
                cfg.evaluate.features = *f;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Gen { .. } => commands::gen(&cfg),
        Command::Split { .. } => commands::split(&cfg),
        Command::Augment { .. } => commands::augment(&cfg),
        Command::Train { .. } => commands::train(&cfg),
        Command::Evaluate { .. } => commands::evaluate(&cfg),
        Command::CheckVgr { report } => commands::check_vgr(&cfg, report.as_deref()),
        Command::Fixtures { dir } => commands::fixtures(&cfg, dir.as_deref()),
        Command::Reproduce => commands::reproduce(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
