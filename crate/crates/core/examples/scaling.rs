//! Times one ColdGuess training epoch and whole-graph inference on graphs of
//! 10k to 80k edges and fits time against edge count.
//!
//! ```text
//! cargo run --release --example scaling
//! ```

use coldguess::coldstart::GeneratorConfig;
use coldguess::eval::{scaling_benchmark, BenchOptions, BenchTask};
use coldguess::models::TrainConfig;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> coldguess::Result<()> {
    let sizes = [10_000, 20_000, 40_000, 80_000];
    let base = GeneratorConfig::default();
    for task in [BenchTask::Inference, BenchTask::TrainEpoch] {
        let r = scaling_benchmark(
            &base,
            &sizes,
            task,
            &TrainConfig::default(),
            &BenchOptions::default(),
        )?;
        println!("{}", r.task);
        for t in &r.timings {
            println!("  {:>6} edges  {:>8.3} s", t.edges, t.seconds);
        }
        println!(
            "  slope {:.3e} s/edge  intercept {:.3} s  R^2 {:.4}",
            r.fit.slope, r.fit.intercept, r.fit.r2
        );
    }
    Ok(())
}
