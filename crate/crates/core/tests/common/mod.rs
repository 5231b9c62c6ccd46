#![allow(dead_code)]

use coldguess::coldstart::{apply_scenario, MaskedGraph, Scenario, ScenarioSpec};
use coldguess::experiment::ExperimentConfig;
use std::collections::BTreeSet;
use std::sync::Arc;

use coldguess::graph::{
    EntityKind, HeteroGraph, Label, NodeRef, NodeType, RelationTag, NUM_SELLER_RELATIONS,
};
use coldguess::models::{
    class_summed_bce, coldguess_forward, label_targets, offer_inputs, ColdGuessArch, Params,
};
use coldguess::sampling::EgoNetwork;
use coldguess::tensor::{Real, Tape, Tensor};
use coldguess::{Result, NUM_CLASSES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Shape {
    pub sellers: usize,
    pub products: usize,
    pub offers: usize,
    pub seller_edges: usize,
    pub dims: (usize, usize, usize),
}

/// Uniformly random graph; duplicate draws are skipped, so counts are upper
/// bounds. Every offer gets a one-hot label.
pub fn random_graph(seed: u64, shape: &Shape) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ds, dp, d_o) = shape.dims;
    let mut g = HeteroGraph::with_dims(ds, dp, d_o);
    let feat = |rng: &mut ChaCha8Rng, d: usize| -> Vec<f32> {
        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    for _ in 0..shape.sellers {
        let f = feat(&mut rng, ds);
        g.add_node(NodeType::Seller, &f).unwrap();
    }
    for _ in 0..shape.products {
        let f = feat(&mut rng, dp);
        g.add_node(NodeType::Product, &f).unwrap();
    }
    for _ in 0..shape.seller_edges {
        let a = rng.random_range(0..shape.sellers);
        let b = rng.random_range(0..shape.sellers);
        let r = RelationTag::seller_seller(rng.random_range(0..NUM_SELLER_RELATIONS)).unwrap();
        let _ = g.add_edge(r, NodeRef::seller(a), NodeRef::seller(b), None);
    }
    for _ in 0..shape.offers {
        let s = rng.random_range(0..shape.sellers);
        let p = rng.random_range(0..shape.products);
        let f = feat(&mut rng, d_o);
        if let Ok(o) = g.add_offer(s, p, &f) {
            let mut l: Label = [0; NUM_CLASSES];
            l[rng.random_range(0..NUM_CLASSES)] = 1;
            g.set_label(o, l).unwrap();
        }
    }
    g
}

/// At most ten nodes.
pub fn toy_graph(seed: u64) -> HeteroGraph {
    random_graph(
        seed,
        &Shape {
            sellers: 5,
            products: 5,
            offers: 8,
            seller_edges: 6,
            dims: (3, 2, 2),
        },
    )
}

pub fn tiny_arch(g: &HeteroGraph) -> ColdGuessArch {
    ColdGuessArch {
        hidden: 4,
        edge_hidden: 4,
        edge_out: 4,
        classifier_hidden: 4,
        ..ColdGuessArch::for_graph(g)
    }
}

pub fn ends(g: &HeteroGraph, offers: &[usize]) -> Vec<(u32, u32)> {
    let ns = g.num_sellers() as u32;
    offers
        .iter()
        .map(|&o| {
            let (s, p) = g.offer_ends()[o];
            (s, ns + p)
        })
        .collect()
}

/// Summed-class BCE of ColdGuess on `offers` over the whole graph, and the
/// gradient of every parameter.
pub fn coldguess_loss<T: Real>(
    params: &Params<T>,
    arch: &ColdGuessArch,
    g: &HeteroGraph,
    offers: &[usize],
) -> Result<(f64, Vec<Tensor<T>>)> {
    let mut tape = Tape::<T>::new();
    let bound = params.bind(&mut tape);
    let ego = EgoNetwork::whole(g.topology()).with_endpoints(&ends(g, offers));
    let x = offer_inputs(g).gather::<T>(offers.iter().copied());
    let probs = coldguess_forward(&mut tape, &bound, arch, g, &ego, x)?;
    let loss = class_summed_bce(&mut tape, probs, Arc::new(label_targets(g, offers, None)))?;
    let value = tape.value(loss).get(0, 0).as_f64();
    let grads = tape.backward(loss)?;
    let gs = bound
        .vars()
        .iter()
        .zip(params.tensors())
        .map(|(&v, t)| grads.get_or_zeros(v, t.shape()))
        .collect();
    Ok((value, gs))
}

fn bits(row: &[f32]) -> Vec<u32> {
    row.iter().map(|v| v.to_bits()).collect()
}

fn check_rows(
    kind: EntityKind,
    before: &HeteroGraph,
    after: &HeteroGraph,
    masked: &BTreeSet<usize>,
    keep: &[String],
) -> std::result::Result<(), String> {
    let keep: Vec<usize> = keep
        .iter()
        .map(|n| {
            before
                .schema()
                .column(kind, n)
                .ok_or(format!("no column {n}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    let (b, a) = (before.features(kind), after.features(kind));
    for r in 0..b.rows() {
        let (rb, ra) = (b.row(r), a.row(r));
        if !masked.contains(&r) {
            if bits(rb) != bits(ra) {
                return Err(format!("{kind:?} {r} changed but is not new"));
            }
            continue;
        }
        for c in 0..rb.len() {
            let ok = if keep.contains(&c) {
                ra[c].to_bits() == rb[c].to_bits()
            } else {
                ra[c].to_bits() == 0
            };
            if !ok {
                return Err(format!("{kind:?} {r} column {c}: {} -> {}", rb[c], ra[c]));
            }
        }
    }
    Ok(())
}

/// Checks a masked graph against its source: which entities are new, which
/// columns are zero, and that everything else is bitwise untouched.
pub fn check_masking(
    g: &HeteroGraph,
    spec: &ScenarioSpec,
    m: &MaskedGraph,
) -> std::result::Result<(), String> {
    let new_offers: BTreeSet<usize> = spec.new_offers.iter().copied().collect();
    let (mut sellers, mut products) = (BTreeSet::new(), BTreeSet::new());
    if matches!(
        spec.scenario,
        Scenario::NewSeller | Scenario::NewSellerNewProduct
    ) {
        sellers.extend(new_offers.iter().map(|&o| g.offer_ends()[o].0 as usize));
    }
    if spec.scenario == Scenario::NewSellerNewProduct {
        products.extend(new_offers.iter().map(|&o| g.offer_ends()[o].1 as usize));
    }
    let offers: BTreeSet<usize> = match spec.scenario {
        Scenario::Full => BTreeSet::new(),
        Scenario::NewOffer => new_offers.clone(),
        _ => (0..g.num_offers())
            .filter(|&o| {
                let (s, p) = g.offer_ends()[o];
                sellers.contains(&(s as usize)) || products.contains(&(p as usize))
            })
            .collect(),
    };
    if m.new_sellers != sellers.iter().copied().collect::<Vec<_>>() {
        return Err("wrong new sellers".into());
    }
    if m.new_products != products.iter().copied().collect::<Vec<_>>() {
        return Err("wrong new products".into());
    }
    if m.masked_offers != offers.iter().copied().collect::<Vec<_>>() {
        return Err("wrong masked offers".into());
    }
    let eval: Vec<usize> = if spec.scenario == Scenario::Full {
        g.labeled_offers()
    } else {
        offers
            .iter()
            .copied()
            .filter(|&o| g.label(o).is_some())
            .collect()
    };
    if m.eval_offers != eval {
        return Err("wrong evaluation set".into());
    }
    check_rows(
        EntityKind::Seller,
        g,
        &m.graph,
        &sellers,
        &spec.retained.seller,
    )?;
    check_rows(
        EntityKind::Product,
        g,
        &m.graph,
        &products,
        &spec.retained.product,
    )?;
    check_rows(
        EntityKind::Offer,
        g,
        &m.graph,
        &offers,
        &spec.retained.offer,
    )?;
    if m.graph.edges() != g.edges() || m.graph.labels() != g.labels() {
        return Err("edges or labels changed".into());
    }
    Ok(())
}

/// Nesting of evaluation sets across severities and idempotence of masking.
pub fn check_nesting_and_idempotence(
    g: &HeteroGraph,
    new_offers: &[usize],
) -> std::result::Result<(), String> {
    let mut evals = Vec::new();
    for s in [
        Scenario::NewOffer,
        Scenario::NewSeller,
        Scenario::NewSellerNewProduct,
    ] {
        let spec = ScenarioSpec::new(s, 0, new_offers.to_vec());
        let once = apply_scenario(g, &spec).map_err(|e| e.to_string())?;
        let twice = apply_scenario(&once.graph, &spec).map_err(|e| e.to_string())?;
        for kind in [EntityKind::Seller, EntityKind::Product, EntityKind::Offer] {
            if bits(once.graph.features(kind).data()) != bits(twice.graph.features(kind).data()) {
                return Err(format!("{} not idempotent on {kind:?}", s.tag()));
            }
        }
        if once.eval_offers != twice.eval_offers {
            return Err(format!(
                "{} evaluation set changed on reapplication",
                s.tag()
            ));
        }
        evals.push(once.eval_offers.into_iter().collect::<BTreeSet<_>>());
    }
    if !(evals[0].is_subset(&evals[1]) && evals[1].is_subset(&evals[2])) {
        return Err("evaluation sets are not nested".into());
    }
    Ok(())
}

/// A marketplace small enough to run every model in a few seconds.
pub fn smoke_config(out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.generator.sellers = 240;
    cfg.generator.products = 240;
    cfg.generator.communities = 6;
    cfg.train.batch_size = 256;
    cfg.per_model.set_epochs(2);
    cfg.output_dir = out.to_path_buf();
    cfg
}
