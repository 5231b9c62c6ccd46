//! Checks the reverse-mode gradients of the full ColdGuess loss against
//! central finite differences on a ten-node graph.
//!
//! ```text
//! cargo run --release --example gradcheck
//! ```

use std::sync::Arc;

use coldguess::graph::{HeteroGraph, NodeRef, NodeType, RelationTag};
use coldguess::models::{
    class_summed_bce, coldguess_forward, label_targets, offer_inputs, ColdGuessArch, Params,
};
use coldguess::sampling::EgoNetwork;
use coldguess::tensor::{finite_diff_check, Tape, Tensor};
use coldguess::NUM_CLASSES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy() -> coldguess::Result<HeteroGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut g = HeteroGraph::with_dims(3, 2, 2);
    let mut feat = |d: usize| -> Vec<f32> { (0..d).map(|_| rng.random_range(-1.0..1.0)).collect() };
    for _ in 0..5 {
        g.add_node(NodeType::Seller, &feat(3))?;
        g.add_node(NodeType::Product, &feat(2))?;
    }
    for (a, b, r) in [(0, 1, 0), (1, 2, 3), (3, 4, 7), (0, 4, 1)] {
        g.add_edge(
            RelationTag::seller_seller(r)?,
            NodeRef::seller(a),
            NodeRef::seller(b),
            None,
        )?;
    }
    for (i, (s, p)) in [(0, 0), (0, 1), (1, 1), (2, 3), (3, 3), (4, 4), (4, 2)]
        .into_iter()
        .enumerate()
    {
        let o = g.add_offer(s, p, &feat(2))?;
        let mut l = [0; NUM_CLASSES];
        l[i % NUM_CLASSES] = 1;
        g.set_label(o, l)?;
    }
    Ok(g)
}

fn main() -> coldguess::Result<()> {
    let g = toy()?;
    let offers = g.labeled_offers();
    let ns = g.num_sellers() as u32;
    let ends: Vec<(u32, u32)> = offers
        .iter()
        .map(|&o| (g.offer_ends()[o].0, ns + g.offer_ends()[o].1))
        .collect();
    let arch = ColdGuessArch {
        hidden: 6,
        edge_hidden: 6,
        edge_out: 6,
        classifier_hidden: 6,
        ..ColdGuessArch::for_graph(&g)
    };
    let init = arch.init(NUM_CLASSES, &mut ChaCha8Rng::seed_from_u64(1));
    let names = init.names().to_vec();

    let loss = |ts: &[Tensor<f64>]| -> coldguess::Result<(f64, Vec<Tensor<f64>>)> {
        let p = Params::from_entries(names.iter().cloned().zip(ts.iter().cloned()).collect());
        let mut tape = Tape::<f64>::new();
        let bound = p.bind(&mut tape);
        let ego = EgoNetwork::whole(g.topology()).with_endpoints(&ends);
        let x = offer_inputs(&g).gather::<f64>(offers.iter().copied());
        let probs = coldguess_forward(&mut tape, &bound, &arch, &g, &ego, x)?;
        let l = class_summed_bce(&mut tape, probs, Arc::new(label_targets(&g, &offers, None)))?;
        let grads = tape.backward(l)?;
        let gs = bound
            .vars()
            .iter()
            .zip(p.tensors())
            .map(|(&v, t)| grads.get_or_zeros(v, t.shape()))
            .collect();
        Ok((tape.value(l).get(0, 0), gs))
    };

    let params = init.cast::<f64>().tensors().to_vec();
    let check = finite_diff_check(loss, &params, 1e-5, 1e-3)?;
    println!(
        "{} coordinates, max relative error {:.2e}, max absolute error {:.2e}",
        check.coordinates, check.max_relative_error, check.max_absolute_error
    );
    if let Some((p, e)) = check.worst {
        println!("worst at {}[{e}]", names[p]);
    }
    Ok(())
}
