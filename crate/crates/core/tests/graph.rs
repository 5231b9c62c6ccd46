mod common;

use std::collections::BTreeSet;

use coldguess::coldstart::{generate_synthetic_graph, GeneratorConfig};
use coldguess::graph::{build_expanded_graph, load_graph, save_graph, validate};
use coldguess::sampling::EgoNetwork;
use common::{random_graph, Shape};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn shape() -> impl Strategy<Value = (u64, Shape)> {
    (any::<u64>(), 1usize..25, 1usize..25, 0usize..80, 0usize..60).prop_map(|(seed, s, p, o, e)| {
        (
            seed,
            Shape {
                sellers: s,
                products: p,
                offers: o,
                seller_edges: e,
                dims: (3, 2, 2),
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(3),
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn adjacency_is_symmetric((seed, sh) in shape()) {
        let g = random_graph(seed, &sh);
        let t = g.topology();
        for v in 0..t.num_nodes() {
            for r in 0..t.num_relations() {
                for &u in t.neighbors(v, r) {
                    prop_assert!(t.neighbors(u as usize, r).contains(&(v as u32)), "{v} {u} {r}");
                }
            }
        }
    }

    #[test]
    fn expanded_graph_doubles_offer_edges((seed, sh) in shape()) {
        let g = random_graph(seed, &sh);
        let eg = build_expanded_graph(&g);
        prop_assert_eq!(eg.num_offer_incident_edges(), 2 * g.num_offers());
        prop_assert_eq!(eg.num_seller_edges(), g.num_seller_edges());
    }

    #[test]
    fn sibling_sets_complete_the_seller_and_product_lists((seed, sh) in shape()) {
        let g = random_graph(seed, &sh);
        for o in 0..g.num_offers() {
            let (n_s, n_p) = g.incident_offer_sets(o);
            let (s, p) = g.offer_ends()[o];
            let mut with_s: BTreeSet<u32> = n_s.into_iter().collect();
            let mut with_p: BTreeSet<u32> = n_p.into_iter().collect();
            prop_assert!(with_s.insert(o as u32) && with_p.insert(o as u32));
            let same_s: BTreeSet<u32> = (0..g.num_offers() as u32).filter(|&x| g.offer_ends()[x as usize].0 == s).collect();
            let same_p: BTreeSet<u32> = (0..g.num_offers() as u32).filter(|&x| g.offer_ends()[x as usize].1 == p).collect();
            prop_assert_eq!(with_s, same_s);
            prop_assert_eq!(with_p, same_p);
        }
    }

    #[test]
    fn bundles_round_trip_and_validate((seed, sh) in shape()) {
        let g = random_graph(seed, &sh);
        let dir = tempfile::tempdir().unwrap();
        save_graph(&g, dir.path()).unwrap();
        let back = load_graph(dir.path()).unwrap();
        prop_assert!(validate(&back).is_ok());
        prop_assert_eq!(back.seller_features(), g.seller_features());
        prop_assert_eq!(back.offer_features(), g.offer_features());
        prop_assert_eq!(back.labels(), g.labels());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn ego_networks_grow_with_depth((seed, sh) in shape(), k in 0usize..4) {
        let g = random_graph(seed, &sh);
        prop_assume!(g.num_offers() > 0);
        let ns = g.num_sellers() as u32;
        let (s, p) = g.offer_ends()[(seed % g.num_offers() as u64) as usize];
        let seeds = [s, ns + p];
        let small: BTreeSet<u32> = EgoNetwork::extract(g.topology(), &seeds, k, None).nodes().iter().copied().collect();
        let big: BTreeSet<u32> = EgoNetwork::extract(g.topology(), &seeds, k + 1, None).nodes().iter().copied().collect();
        prop_assert!(small.is_subset(&big));
    }
}

#[test]
fn generated_graphs_double_offer_edges() {
    for seed in 0..5 {
        let cfg = GeneratorConfig {
            seed,
            ..GeneratorConfig::default().scaled_to_edges(5_000)
        };
        let g = generate_synthetic_graph(&cfg).unwrap();
        assert_eq!(
            build_expanded_graph(&g).num_offer_incident_edges(),
            2 * g.num_offers()
        );
    }
}
