//! The full experiment on a small marketplace: generate, train every model,
//! score every cold-start scenario and write the comparison tables.
//!
//! ```text
//! cargo run --release --example pipeline [out_dir]
//! ```

use coldguess::experiment::{cmd_repro, ExperimentConfig, Log};

fn main() -> coldguess::Result<()> {
    let mut cfg = ExperimentConfig::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/smoke.json"
    ))?;
    if let Some(out) = std::env::args().nth(1) {
        cfg.output_dir = out.into();
    }
    let out = cmd_repro(&cfg, &Log::stderr())?;
    println!("geometric-mean AUC");
    print!(
        "{}",
        out.table
            .lines()
            .filter(|l| l.contains("geomean") || l.starts_with("model"))
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
    println!(
        "tables and per-model reports under {}",
        cfg.output_dir.display()
    );
    Ok(())
}
