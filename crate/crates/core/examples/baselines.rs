//! Trains all five models on a small marketplace and prints the
//! geometric-mean AUC of each on the full and the new-seller-new-product
//! test graphs.
//!
//! ```text
//! cargo run --release --example baselines
//! ```

use coldguess::coldstart::{
    apply_scenario, generate_synthetic_graph, sample_cold_entities, ColdStartRates,
    GeneratorConfig, Scenario, ScenarioSpec,
};
use coldguess::eval::per_class_report;
use coldguess::models::{Model, ModelKind, TrainConfig, TrainMode};

fn main() -> coldguess::Result<()> {
    let cfg = GeneratorConfig {
        sellers: 1000,
        products: 1000,
        communities: 10,
        ..GeneratorConfig::default()
    };
    let train = generate_synthetic_graph(&cfg)?;
    let test = generate_synthetic_graph(&GeneratorConfig {
        seed: cfg.seed + 1,
        ..cfg.clone()
    })?;
    let new_offers = sample_cold_entities(&test, &ColdStartRates::default(), 11);
    let graphs: Vec<_> = [Scenario::Full, Scenario::NewSellerNewProduct]
        .into_iter()
        .map(|s| apply_scenario(&test, &ScenarioSpec::new(s, 11, new_offers.clone())))
        .collect::<coldguess::Result<_>>()?;

    println!("{:<14} {:>8} {:>8}", "model", "G_o", "G_nsnp");
    for kind in ModelKind::ALL {
        let tc = match kind {
            ModelKind::Coldguess => TrainConfig {
                epochs: 20,
                ..TrainConfig::default()
            },
            ModelKind::RgcnExpanded => TrainConfig {
                epochs: 3,
                batch_size: 256,
                lr: 5e-3,
                ..TrainConfig::default()
            },
            _ => TrainConfig {
                epochs: 100,
                ..TrainConfig::default()
            },
        };
        let mut model = Model::for_graph(kind, &train, TrainMode::MultiTask, tc.seed);
        model.train(&train, &tc, &mut |_| {})?;
        let mut row = Vec::new();
        for m in &graphs {
            let labels: Vec<_> = m
                .eval_offers
                .iter()
                .map(|&o| *m.graph.label(o).unwrap())
                .collect();
            let scores = model.score_with(&m.graph, &m.eval_offers, &m.new_sellers)?;
            row.push(
                per_class_report(&scores, &labels, None)?
                    .geomean_auc
                    .unwrap_or(f64::NAN),
            );
        }
        println!("{:<14} {:>8.4} {:>8.4}", kind.name(), row[0], row[1]);
    }
    Ok(())
}
