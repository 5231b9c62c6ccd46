use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coldguess::experiment::{
    cmd_bench, cmd_eval, cmd_generate, cmd_repro, cmd_score, cmd_train, ExperimentConfig, Log,
};
use coldguess::models::{ModelKind, TrainMode};
use coldguess::{Error, Result};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Cold-start risk scoring on seller-product graphs. Set CG_SEED to
/// override every seed in the config; explicit flags win over both.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Experiment config (JSON); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides CG_SEED and the config seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/test graph bundles and scenario specs.
    Generate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a graph bundle.
    Train {
        #[arg(long)]
        graph: PathBuf,
        /// coldguess | naive | sign | rgcn_expanded | tabular
        #[arg(long, default_value = "coldguess")]
        model: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        /// multi_task | nine_binary
        #[arg(long)]
        mode: Option<String>,
    },
    /// Score a scenario's evaluation set (full data without --scenario).
    Score {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class ROC-AUC report; CSV on stdout.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        /// labels.csv of the scored graph bundle.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Also write <out>.csv and <out>.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time training epochs and inference across graph sizes.
    Bench {
        #[arg(long, default_value = "bench")]
        out: PathBuf,
    },
    /// Generate, train all models, score all scenarios, write tables.
    Repro {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::resolve(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    let log = Log::stderr();
    match cli.command {
        Command::Generate { out } => cmd_generate(&cfg, &out, &log),
        Command::Train {
            graph,
            model,
            out,
            epochs,
            mode,
        } => {
            let kind = ModelKind::parse(&model)
                .ok_or_else(|| Error::Config(format!("--model: unknown model {model:?}")))?;
            if let Some(e) = epochs {
                cfg.per_model.set_epochs(e);
            }
            if let Some(m) = mode {
                cfg.train.mode = match m.as_str() {
                    "multi_task" => TrainMode::MultiTask,
                    "nine_binary" => TrainMode::NineBinary,
                    other => return Err(Error::Config(format!("--mode: unknown mode {other:?}"))),
                };
            }
            cmd_train(&graph, &cfg, kind, &out, &log).map(|_| ())
        }
        Command::Score {
            checkpoint,
            graph,
            scenario,
            out,
        } => cmd_score(&checkpoint, &graph, scenario.as_deref(), &out, &log).map(|_| ()),
        Command::Eval {
            scores,
            labels,
            baseline,
            out,
        } => {
            let report = cmd_eval(&scores, &labels, baseline.as_deref(), out.as_deref())?;
            print!("{}", report.to_csv());
            Ok(())
        }
        Command::Bench { out } => {
            for r in cmd_bench(&cfg, &out, &log)? {
                println!(
                    "{} slope={:e} intercept={:e} r2={:.4}",
                    r.task, r.fit.slope, r.fit.intercept, r.fit.r2
                );
            }
            Ok(())
        }
        Command::Repro { out, epochs } => {
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(e) = epochs {
                cfg.per_model.set_epochs(e);
            }
            let r = cmd_repro(&cfg, &log)?;
            print!("{}", r.table);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"event": "error", "message": e.to_string()})
            );
            ExitCode::FAILURE
        }
    }
}
