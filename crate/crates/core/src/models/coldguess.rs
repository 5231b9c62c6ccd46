//! Node embedder, homogeneous-influence edge embedder and the final classifier.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Bound, Init, Params};
use super::rgcn::{project_ego, rgcn_stack, RgcnLayerVars};
use crate::graph::{FeatureMatrix, HeteroGraph, NUM_RELATIONS};
use crate::sampling::EgoNetwork;
use crate::tensor::{Activation, Real, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColdGuessArch {
    pub d_seller: usize,
    pub d_product: usize,
    pub d_offer: usize,
    pub hidden: usize,
    pub layers: usize,
    pub edge_hidden: usize,
    pub edge_out: usize,
    pub classifier_hidden: usize,
}

impl ColdGuessArch {
    pub fn new(d_seller: usize, d_product: usize, d_offer: usize) -> Self {
        Self {
            d_seller,
            d_product,
            d_offer,
            hidden: 64,
            layers: 3,
            edge_hidden: 64,
            edge_out: 64,
            classifier_hidden: 64,
        }
    }

    pub fn for_graph(g: &HeteroGraph) -> Self {
        let (s, p, o) = g.schema().dims();
        Self::new(s, p, o)
    }

    pub fn edge_input_width(&self) -> usize {
        3 * self.d_offer
    }

    pub fn classifier_input_width(&self) -> usize {
        2 * self.hidden + self.edge_out
    }

    pub fn init<R: Rng>(&self, outputs: usize, rng: &mut R) -> Params {
        let h = self.hidden;
        let mut init = Init::new(rng);
        init.layer("proj_s", self.d_seller, h);
        init.layer("proj_p", self.d_product, h);
        for l in 0..self.layers {
            init.layer(&format!("rgcn{l}.self"), h, h);
            for r in 0..NUM_RELATIONS {
                init.weight(format!("rgcn{l}.rel{r}"), h, h);
            }
        }
        init.layer("edge1", self.edge_input_width(), self.edge_hidden);
        init.layer("edge2", self.edge_hidden, self.edge_out);
        init.layer(
            "clf1",
            self.classifier_input_width(),
            self.classifier_hidden,
        );
        init.layer("clf2", self.classifier_hidden, outputs);
        init.finish()
    }

    pub(crate) fn check_graph(&self, g: &HeteroGraph) -> Result<()> {
        let dims = g.schema().dims();
        if dims != (self.d_seller, self.d_product, self.d_offer) {
            return Err(Error::Config(format!(
                "model expects feature dims {:?}, graph has {dims:?}",
                (self.d_seller, self.d_product, self.d_offer)
            )));
        }
        Ok(())
    }
}

/// Mean features of the other offers sharing the target's seller and product.
/// Returns `(o_s, o_p)`, zero vectors when a side has no siblings.
pub fn summarize_neighbor_offers(g: &HeteroGraph, offer: usize) -> (Vec<f32>, Vec<f32>) {
    let (ns, np) = g.incident_offer_sets(offer);
    let f = g.offer_features();
    (f.mean_of(&ns), f.mean_of(&np))
}

/// Edge-embedder input `o_o ‖ o_p ‖ o_s` for every offer of `g`.
pub fn offer_inputs(g: &HeteroGraph) -> FeatureMatrix {
    let d = g.offer_features().cols();
    let mut out = FeatureMatrix::new(3 * d);
    let mut row = Vec::with_capacity(3 * d);
    for o in 0..g.num_offers() {
        let (os, op) = summarize_neighbor_offers(g, o);
        row.clear();
        row.extend_from_slice(g.offer_features().row(o));
        row.extend_from_slice(&op);
        row.extend_from_slice(&os);
        out.push_row(&row).expect("fixed width");
    }
    out
}

/// Input projection followed by the RGCN stack; returns `(emb_s, emb_p)` for
/// the ego network's offer endpoints.
pub fn node_embedder_forward<T: Real>(
    tape: &mut Tape<T>,
    p: &Bound,
    arch: &ColdGuessArch,
    ego: &EgoNetwork,
    sellers: &FeatureMatrix,
    products: &FeatureMatrix,
) -> Result<(Var, Var)> {
    let proj = [
        (p.var("proj_s.w"), p.var("proj_s.b")),
        (p.var("proj_p.w"), p.var("proj_p.b")),
    ];
    let h0 = project_ego(tape, ego, &[sellers, products], &proj, Activation::Relu)?;
    let layers: Vec<RgcnLayerVars> = (0..arch.layers)
        .map(|l| RgcnLayerVars {
            self_weight: p.var(&format!("rgcn{l}.self.w")),
            bias: p.var(&format!("rgcn{l}.self.b")),
            relation_weights: (0..NUM_RELATIONS)
                .map(|r| p.var(&format!("rgcn{l}.rel{r}")))
                .collect(),
        })
        .collect();
    let h = rgcn_stack(tape, ego, h0, &layers)?;
    let (s, pr): (Vec<u32>, Vec<u32>) = ego.endpoints().iter().copied().unzip();
    let emb_s = tape.gather_rows(h, Arc::from(s))?;
    let emb_p = tape.gather_rows(h, Arc::from(pr))?;
    Ok((emb_s, emb_p))
}

/// Two-layer MLP over `o_o ‖ o_p ‖ o_s`.
pub fn edge_embedder_forward<T: Real>(tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
    let h = tape.affine(x, p.var("edge1.w"), p.var("edge1.b"))?;
    let h = tape.relu(h)?;
    tape.affine(h, p.var("edge2.w"), p.var("edge2.b"))
}

/// Sigmoid scores from `emb_s ‖ emb_p ‖ emb_o`.
pub fn classifier_forward<T: Real>(
    tape: &mut Tape<T>,
    p: &Bound,
    emb_s: Var,
    emb_p: Var,
    emb_o: Var,
) -> Result<Var> {
    let x = tape.concat_cols(&[emb_s, emb_p, emb_o])?;
    let h = tape.affine(x, p.var("clf1.w"), p.var("clf1.b"))?;
    let h = tape.relu(h)?;
    let z = tape.affine(h, p.var("clf2.w"), p.var("clf2.b"))?;
    tape.sigmoid(z)
}

/// Full model for the offers whose endpoints `ego` records; `edge_in` holds
/// their `o_o ‖ o_p ‖ o_s` rows in the same order.
pub fn coldguess_forward<T: Real>(
    tape: &mut Tape<T>,
    p: &Bound,
    arch: &ColdGuessArch,
    g: &HeteroGraph,
    ego: &EgoNetwork,
    edge_in: Tensor<T>,
) -> Result<Var> {
    if edge_in.rows() != ego.endpoints().len() || edge_in.cols() != arch.edge_input_width() {
        return Err(Error::Shape(format!(
            "edge input {:?} for {} offers of width {}",
            edge_in.shape(),
            ego.endpoints().len(),
            arch.edge_input_width()
        )));
    }
    let (emb_s, emb_p) = node_embedder_forward(
        tape,
        p,
        arch,
        ego,
        g.seller_features(),
        g.product_features(),
    )?;
    let x = tape.constant(edge_in);
    let emb_o = edge_embedder_forward(tape, p, x)?;
    classifier_forward(tape, p, emb_s, emb_p, emb_o)
}
