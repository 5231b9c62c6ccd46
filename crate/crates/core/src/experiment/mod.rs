//! Reproducible experiments: config files, the generate/train/score/eval/
//! bench/repro commands and their on-disk artifacts.

mod commands;
mod config;
mod files;
mod log;

pub use commands::{
    cmd_bench, cmd_eval, cmd_generate, cmd_repro, cmd_score, cmd_train, ReproOutput, ScoreSet,
};
pub use config::{
    BenchConfig, ExperimentConfig, PerModel, TrainOverride, CONFIG_VERSION, SEED_ENV,
};
pub use files::{read_labels, read_scores, scores_csv};
pub use log::Log;
