//! Generates a planted-community marketplace, writes it as a graph bundle,
//! reads it back and prints what it contains.
//!
//! ```text
//! cargo run --release --example generate_graph [out_dir]
//! ```

use coldguess::coldstart::{
    generate_synthetic_graph, seller_communities, GeneratorConfig, NORMAL_CLASS,
};
use coldguess::graph::{load_graph, save_graph, validate, RelationTag};
use coldguess::NUM_CLASSES;

fn main() -> coldguess::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "graph_bundle".into());
    let cfg = GeneratorConfig {
        sellers: 1000,
        products: 1000,
        communities: 10,
        ..GeneratorConfig::default()
    };
    let g = generate_synthetic_graph(&cfg)?;
    println!(
        "{} sellers, {} products, {} offers, {} edges ({} seller-seller)",
        g.num_sellers(),
        g.num_products(),
        g.num_offers(),
        g.num_edges(),
        g.num_seller_edges()
    );

    for tag in RelationTag::all() {
        let n: usize = (0..g.num_sellers())
            .map(|s| g.topology().degree(s, tag.id()))
            .sum();
        println!("  {:<16} {:>6} adjacency entries", tag.name(), n);
    }

    let mut counts = [0usize; NUM_CLASSES];
    for l in g.labels().iter().flatten() {
        for (c, &v) in l.iter().enumerate() {
            counts[c] += v as usize;
        }
    }
    println!("class counts {counts:?}");

    // risk clusters: defect rates differ sharply between communities
    let community = seller_communities(&cfg);
    let mut per = vec![(0usize, 0usize); cfg.communities];
    for o in 0..g.num_offers() {
        let c = community[g.offer_ends()[o].0 as usize];
        per[c].1 += 1;
        if g.label(o).is_some_and(|l| l[NORMAL_CLASS] == 0) {
            per[c].0 += 1;
        }
    }
    let rates: Vec<f64> = per
        .iter()
        .map(|&(d, n)| d as f64 / n.max(1) as f64)
        .collect();
    let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().copied().fold(0.0, f64::max);
    println!("defect rate per community ranges from {lo:.3} to {hi:.3}");

    save_graph(&g, &out)?;
    let back = load_graph(&out)?;
    if let Err(v) = validate(&back) {
        println!("invalid bundle: {} {}", v.location, v.problem);
    }
    assert_eq!(back.offer_features(), g.offer_features());
    println!("bundle written to {out}/ and read back intact");
    Ok(())
}
