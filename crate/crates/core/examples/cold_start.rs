//! Builds the three cold-start test graphs from one sampled set of new
//! offers and shows how much of each graph gets masked, then compares
//! ColdGuess with the tabular baseline on each.
//!
//! ```text
//! cargo run --release --example cold_start
//! ```

use coldguess::coldstart::{
    apply_scenario, generate_synthetic_graph, sample_cold_entities, ColdStartRates,
    GeneratorConfig, Scenario, ScenarioSpec,
};
use coldguess::eval::per_class_report;
use coldguess::models::{Model, ModelKind, TrainConfig, TrainMode};

fn main() -> coldguess::Result<()> {
    let cfg = GeneratorConfig {
        sellers: 2000,
        products: 2000,
        communities: 20,
        ..GeneratorConfig::default()
    };
    let train = generate_synthetic_graph(&cfg)?;
    let test = generate_synthetic_graph(&GeneratorConfig {
        seed: cfg.seed + 1,
        ..cfg.clone()
    })?;
    let new_offers = sample_cold_entities(&test, &ColdStartRates::default(), 11);
    println!(
        "{} of {} test offers sampled as new",
        new_offers.len(),
        test.num_offers()
    );

    let mut models = Vec::new();
    for (kind, epochs) in [(ModelKind::Coldguess, 20), (ModelKind::Tabular, 100)] {
        let tc = TrainConfig {
            epochs,
            ..TrainConfig::default()
        };
        let mut m = Model::for_graph(kind, &train, TrainMode::MultiTask, tc.seed);
        m.train(&train, &tc, &mut |_| {})?;
        models.push(m);
    }

    println!("scenario  masked  sellers  products  eval   coldguess  tabular");
    for s in Scenario::ALL {
        let spec = ScenarioSpec::new(s, 11, new_offers.clone());
        let m = apply_scenario(&test, &spec)?;
        let labels: Vec<_> = m
            .eval_offers
            .iter()
            .map(|&o| *m.graph.label(o).unwrap())
            .collect();
        let mut geo = Vec::new();
        for model in &models {
            let scores = model.score_with(&m.graph, &m.eval_offers, &m.new_sellers)?;
            geo.push(
                per_class_report(&scores, &labels, None)?
                    .geomean_auc
                    .unwrap_or(f64::NAN),
            );
        }
        println!(
            "{:<8} {:>7} {:>8} {:>9} {:>5}   {:.4}     {:.4}",
            s.tag(),
            m.masked_offers.len(),
            m.new_sellers.len(),
            m.new_products.len(),
            m.eval_offers.len(),
            geo[0],
            geo[1]
        );
    }
    Ok(())
}
