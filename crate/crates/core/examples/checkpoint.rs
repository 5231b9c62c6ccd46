//! Saves a trained model, reloads it and confirms the scores are bitwise
//! identical, then shows that a damaged file is refused.
//!
//! ```text
//! cargo run --release --example checkpoint
//! ```

use coldguess::coldstart::{generate_synthetic_graph, GeneratorConfig};
use coldguess::models::{
    load_checkpoint, save_checkpoint, Model, ModelKind, TrainConfig, TrainMode,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = generate_synthetic_graph(&GeneratorConfig::default().scaled_to_edges(5_000))?;
    let tc = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let mut model = Model::for_graph(ModelKind::Coldguess, &g, TrainMode::MultiTask, tc.seed);
    model.train(&g, &tc, &mut |_| {})?;

    let dir = std::env::temp_dir().join("coldguess-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("coldguess.ckpt");
    save_checkpoint(&model, &path)?;
    let back = load_checkpoint(&path)?;

    let probe: Vec<usize> = (0..g.num_offers()).step_by(10).collect();
    let (a, b) = (model.score(&g, &probe)?, back.score(&g, &probe)?);
    let same = a
        .data()
        .iter()
        .zip(b.data())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    println!(
        "{} bytes, {} probe offers, bitwise equal: {same}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        probe.len()
    );

    let mut bytes = std::fs::read(&path)?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    let bad = dir.join("damaged.ckpt");
    std::fs::write(&bad, &bytes)?;
    match load_checkpoint(&bad) {
        Ok(_) => println!("damaged checkpoint loaded (unexpected)"),
        Err(e) => println!("damaged checkpoint rejected: {e}"),
    }
    Ok(())
}
