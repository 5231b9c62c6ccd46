//! Trains ColdGuess on one marketplace snapshot and scores another drawn
//! from the same world, printing the loss curve and per-class ROC-AUC.
//!
//! ```text
//! cargo run --release --example train_coldguess
//! ```

use coldguess::coldstart::{generate_synthetic_graph, GeneratorConfig};
use coldguess::eval::per_class_report;
use coldguess::models::{Model, ModelKind, TrainConfig, TrainMode};

fn main() -> coldguess::Result<()> {
    let cfg = GeneratorConfig {
        sellers: 1500,
        products: 1500,
        communities: 15,
        ..GeneratorConfig::default()
    };
    let train = generate_synthetic_graph(&cfg)?;
    let test = generate_synthetic_graph(&GeneratorConfig {
        seed: cfg.seed + 1,
        ..cfg.clone()
    })?;

    let tc = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    let mut model = Model::for_graph(ModelKind::Coldguess, &train, TrainMode::MultiTask, tc.seed);
    let report = model.train(&train, &tc, &mut |e| {
        println!(
            "epoch {:>2}  loss {:.4}  {:.1}s",
            e.epoch, e.loss, e.seconds
        )
    })?;
    let curve = report.loss_curve();
    println!("loss {:.4} -> {:.4}", curve[0], curve[curve.len() - 1]);

    let offers = test.labeled_offers();
    let scores = model.score(&test, &offers)?;
    let labels: Vec<_> = offers.iter().map(|&o| *test.label(o).unwrap()).collect();
    let r = per_class_report(&scores, &labels, None)?;
    print!("{}", r.to_csv());
    Ok(())
}
