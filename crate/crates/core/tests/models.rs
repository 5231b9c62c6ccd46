mod common;

use coldguess::eval::roc_auc_f32;
use coldguess::graph::{HeteroGraph, NodeRef, NodeType, RelationTag};
use coldguess::models::{offer_inputs, Architecture, Model, ModelKind, TrainConfig, TrainMode};
use coldguess::tensor::OptimizerKind;
use coldguess::{Error, NUM_CLASSES};
use common::{random_graph, Shape};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixed(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(77),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn shape(n: usize) -> Shape {
    Shape {
        sellers: n,
        products: n,
        offers: 3 * n,
        seller_edges: 2 * n,
        dims: (4, 3, 3),
    }
}

/// Rebuilds `g` with sellers, products and offers renumbered. Returns the
/// new graph and, for each old offer, its new index.
fn permuted(g: &HeteroGraph, seed: u64) -> (HeteroGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps: Vec<usize> = (0..g.num_sellers()).collect();
    let mut pp: Vec<usize> = (0..g.num_products()).collect();
    let mut po: Vec<usize> = (0..g.num_offers()).collect();
    ps.shuffle(&mut rng);
    pp.shuffle(&mut rng);
    po.shuffle(&mut rng);
    let inv = |p: &[usize]| {
        let mut v = vec![0; p.len()];
        for (new, &old) in p.iter().enumerate() {
            v[old] = new;
        }
        v
    };
    let (is, ip) = (inv(&ps), inv(&pp));
    let (ds, dp, d_o) = g.schema().dims();
    let mut h = HeteroGraph::with_dims(ds, dp, d_o);
    for &old in &ps {
        h.add_node(NodeType::Seller, g.seller_features().row(old))
            .unwrap();
    }
    for &old in &pp {
        h.add_node(NodeType::Product, g.product_features().row(old))
            .unwrap();
    }
    let mut edges: Vec<_> = g
        .edges()
        .iter()
        .filter(|e| e.relation != RelationTag::OFFER)
        .collect();
    edges.shuffle(&mut rng);
    for e in edges {
        h.add_edge(
            e.relation,
            NodeRef::seller(is[e.src.idx()]),
            NodeRef::seller(is[e.dst.idx()]),
            None,
        )
        .unwrap();
    }
    let mut new_index = vec![0; g.num_offers()];
    for &old in &po {
        let (s, p) = g.offer_ends()[old];
        let o = h
            .add_offer(is[s as usize], ip[p as usize], g.offer_features().row(old))
            .unwrap();
        if let Some(l) = g.label(old) {
            h.set_label(o, *l).unwrap();
        }
        new_index[old] = o;
    }
    (h, new_index)
}

proptest! {
    #![proptest_config(fixed(12))]

    #[test]
    fn coldguess_is_permutation_equivariant(seed in any::<u64>(), n in 4usize..30) {
        let g = random_graph(seed, &shape(n));
        let (h, map) = permuted(&g, seed ^ 0x5eed);
        let model = Model::for_graph(ModelKind::Coldguess, &g, TrainMode::MultiTask, seed);
        let offers: Vec<usize> = (0..g.num_offers()).collect();
        let mapped: Vec<usize> = offers.iter().map(|&o| map[o]).collect();
        let a = model.score(&g, &offers).unwrap();
        let b = model.score(&h, &mapped).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-6, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn ego_batches_match_whole_graph(seed in any::<u64>(), n in 4usize..60) {
        let g = random_graph(seed, &shape(n));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=g.num_offers().max(1));
        let batch: Vec<usize> = rand::seq::index::sample(&mut rng, g.num_offers(), k).into_vec();
        for kind in [ModelKind::Coldguess, ModelKind::RgcnExpanded] {
            let model = Model::for_graph(kind, &g, TrainMode::MultiTask, seed);
            let whole = model.score(&g, &batch).unwrap();
            let ego = model.score_batch(&g, &batch).unwrap();
            prop_assert!(whole.max_abs_diff(&ego) <= 1e-6, "{kind:?} {}", whole.max_abs_diff(&ego));
        }
    }

    #[test]
    fn modes_agree_at_initialization(seed in any::<u64>(), kind_i in 0usize..5) {
        let g = random_graph(seed, &shape(12));
        let kind = ModelKind::ALL[kind_i];
        let offers = g.labeled_offers();
        let multi = Model::for_graph(kind, &g, TrainMode::MultiTask, seed);
        let nine = Model::for_graph(kind, &g, TrainMode::NineBinary, seed);
        prop_assert_eq!(multi.score(&g, &offers).unwrap(), nine.score(&g, &offers).unwrap());
        let per_head: f64 = nine.head_losses(&g, &offers).unwrap().iter().sum();
        let joint = multi.head_losses(&g, &offers).unwrap()[0];
        prop_assert!((per_head - joint).abs() <= 1e-4 * joint.abs().max(1.0), "{per_head} vs {joint}");
    }
}

#[test]
fn lone_offer_embedding_uses_only_its_own_features() {
    let mut g = HeteroGraph::with_dims(2, 2, 3);
    for _ in 0..3 {
        g.add_node(NodeType::Seller, &[0.5, -1.0]).unwrap();
        g.add_node(NodeType::Product, &[1.0, 2.0]).unwrap();
    }
    let lone = g.add_offer(0, 0, &[1.0, 2.0, 3.0]).unwrap();
    let a = g.add_offer(1, 1, &[4.0, 5.0, 6.0]).unwrap();
    let b = g.add_offer(1, 2, &[7.0, 8.0, 9.0]).unwrap();
    let c = g.add_offer(2, 2, &[-1.0, 0.0, 1.0]).unwrap();
    g.add_edge(
        RelationTag::seller_seller(0).unwrap(),
        NodeRef::seller(0),
        NodeRef::seller(1),
        None,
    )
    .unwrap();
    let x = offer_inputs(&g);
    assert_eq!(x.row(lone), &[1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    // b's seller sibling is a, its product sibling is c
    assert_eq!(x.row(b), &[7.0, 8.0, 9.0, -1.0, 0.0, 1.0, 4.0, 5.0, 6.0]);

    // wiping every other offer leaves the lone offer's input untouched
    let mut h = g.clone();
    for o in [a, b, c] {
        h.offer_features_mut().row_mut(o).fill(0.0);
    }
    assert_eq!(offer_inputs(&h).row(lone), x.row(lone));
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let g = random_graph(4, &shape(10));
    for kind in ModelKind::ALL {
        let mut m = Model::for_graph(kind, &g, TrainMode::MultiTask, 1);
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            lr: 0.0,
            ..TrainConfig::default()
        };
        m.train(&g, &cfg, &mut |_| {}).unwrap();
        assert_eq!(m, before, "{kind:?}");
    }
}

#[test]
fn non_finite_inputs_report_divergence() {
    let mut g = random_graph(6, &shape(8));
    g.offer_features_mut().row_mut(0)[1] = f32::NAN;
    let mut m = Model::for_graph(ModelKind::Tabular, &g, TrainMode::MultiTask, 1);
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 1000,
        ..TrainConfig::default()
    };
    assert!(matches!(
        m.train(&g, &cfg, &mut |_| {}),
        Err(Error::Diverged { epoch: 0, .. })
    ));
}

/// Class is a deterministic function of the offer's first feature, so any
/// model with access to offer features should separate it.
fn separable_graph() -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut g = HeteroGraph::with_dims(2, 2, 2);
    for _ in 0..40 {
        let f: Vec<f32> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        g.add_node(NodeType::Seller, &f).unwrap();
        g.add_node(NodeType::Product, &f).unwrap();
    }
    let mut n = 0;
    while n < 300 {
        let (s, p) = (rng.random_range(0..40), rng.random_range(0..40));
        let class = rng.random_range(0..NUM_CLASSES);
        let f = [class as f32 / 4.0 - 1.0, rng.random_range(-1.0..1.0)];
        if let Ok(o) = g.add_offer(s, p, &f) {
            let mut l = [0u8; NUM_CLASSES];
            l[class] = 1;
            g.set_label(o, l).unwrap();
            n += 1;
        }
    }
    g
}

#[test]
fn separable_toy_is_learned() {
    let g = separable_graph();
    let offers = g.labeled_offers();
    for (kind, optimizer, lr, epochs) in [
        (ModelKind::Tabular, OptimizerKind::Adam, 0.01, 150),
        (ModelKind::Coldguess, OptimizerKind::Adam, 0.01, 60),
        (ModelKind::Coldguess, OptimizerKind::Adam, 0.003, 60),
        (ModelKind::Sign, OptimizerKind::Sgd, 0.5, 300),
    ] {
        let arch = Architecture::for_graph(kind, &g, 1);
        let mut m = Model::new(arch, TrainMode::MultiTask, 2);
        let cfg = TrainConfig {
            epochs,
            batch_size: 64,
            lr,
            optimizer,
            sign_hops: 1,
            ..TrainConfig::default()
        };
        let report = m.train(&g, &cfg, &mut |_| {}).unwrap();
        let curve = report.loss_curve();
        assert!(
            curve.last().unwrap() < &(0.5 * curve[0]),
            "{kind:?} {curve:?}"
        );
        let scores = m.score(&g, &offers).unwrap();
        for c in 0..NUM_CLASSES {
            let s: Vec<f32> = (0..offers.len()).map(|r| scores.get(r, c)).collect();
            let l: Vec<u8> = offers.iter().map(|&o| g.label(o).unwrap()[c]).collect();
            let auc = roc_auc_f32(&s, &l).unwrap();
            assert!(auc > 0.9, "{kind:?} class {c}: {auc}");
        }
    }
}
