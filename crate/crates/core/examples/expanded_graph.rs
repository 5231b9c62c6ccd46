//! Compares the consolidated graph, where offers are edges, with the
//! expanded graph, where every offer becomes a node with two edges.
//!
//! ```text
//! cargo run --release --example expanded_graph
//! ```

use coldguess::coldstart::{generate_synthetic_graph, GeneratorConfig};
use coldguess::graph::build_expanded_graph;

fn main() -> coldguess::Result<()> {
    println!(
        "{:>8} {:>10} {:>12} {:>10} {:>12}",
        "offers", "edges", "expanded", "offer-inc", "adj bytes"
    );
    for edges in [5_000, 20_000, 80_000] {
        let g = generate_synthetic_graph(&GeneratorConfig::default().scaled_to_edges(edges))?;
        let eg = build_expanded_graph(&g);
        assert_eq!(eg.num_offer_incident_edges(), 2 * g.num_offers());
        println!(
            "{:>8} {:>10} {:>12} {:>10} {:>5} / {:<5}",
            g.num_offers(),
            g.num_edges(),
            eg.num_edges(),
            eg.num_offer_incident_edges(),
            g.topology().adjacency_bytes() / 1024,
            eg.topology().adjacency_bytes() / 1024,
        );
    }
    println!("adjacency sizes in KiB, consolidated / expanded");
    Ok(())
}
