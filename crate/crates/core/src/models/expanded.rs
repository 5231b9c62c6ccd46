//! RGCN node classification on the offers-as-nodes graph.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Bound, Init, Params};
use super::rgcn::{project_ego, rgcn_stack, RgcnLayerVars};
use crate::graph::{ExpandedGraph, HeteroGraph};
use crate::sampling::EgoNetwork;
use crate::tensor::{Activation, Real, Tape, Var};
use crate::{Error, Result};

pub const EXPANDED_RELATIONS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandedArch {
    pub d_seller: usize,
    pub d_product: usize,
    pub d_offer: usize,
    pub hidden: usize,
    pub layers: usize,
    pub head_hidden: usize,
}

impl ExpandedArch {
    pub fn for_graph(g: &HeteroGraph) -> Self {
        let (d_seller, d_product, d_offer) = g.schema().dims();
        Self {
            d_seller,
            d_product,
            d_offer,
            hidden: 64,
            layers: 6,
            head_hidden: 64,
        }
    }

    pub fn init<R: Rng>(&self, outputs: usize, rng: &mut R) -> Params {
        let h = self.hidden;
        let mut init = Init::new(rng);
        init.layer("proj_s", self.d_seller, h);
        init.layer("proj_p", self.d_product, h);
        init.layer("proj_o", self.d_offer, h);
        for l in 0..self.layers {
            init.layer(&format!("rgcn{l}.self"), h, h);
            for r in 0..EXPANDED_RELATIONS {
                init.weight(format!("rgcn{l}.rel{r}"), h, h);
            }
        }
        init.layer("head1", h, self.head_hidden);
        init.layer("head2", self.head_hidden, outputs);
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

/// Ego network around the offer nodes of `offers`.
pub fn expanded_ego(
    eg: &ExpandedGraph,
    offers: &[usize],
    hops: usize,
    fanout_cap: Option<usize>,
) -> EgoNetwork {
    let seeds: Vec<u32> = offers.iter().map(|&o| eg.offer_node(o) as u32).collect();
    EgoNetwork::extract(eg.topology(), &seeds, hops, fanout_cap)
}

/// Scores for `offers`, whose offer nodes must be in `ego`.
pub fn expanded_rgcn_forward<T: Real>(
    tape: &mut Tape<T>,
    p: &Bound,
    arch: &ExpandedArch,
    eg: &ExpandedGraph,
    ego: &EgoNetwork,
    offers: &[usize],
) -> Result<Var> {
    let proj = [
        (p.var("proj_s.w"), p.var("proj_s.b")),
        (p.var("proj_p.w"), p.var("proj_p.b")),
        (p.var("proj_o.w"), p.var("proj_o.b")),
    ];
    let feats = [
        eg.seller_features(),
        eg.product_features(),
        eg.offer_features(),
    ];
    let h0 = project_ego(tape, ego, &feats, &proj, Activation::Relu)?;
    let layers: Vec<RgcnLayerVars> = (0..arch.layers)
        .map(|l| RgcnLayerVars {
            self_weight: p.var(&format!("rgcn{l}.self.w")),
            bias: p.var(&format!("rgcn{l}.self.b")),
            relation_weights: (0..EXPANDED_RELATIONS)
                .map(|r| p.var(&format!("rgcn{l}.rel{r}")))
                .collect(),
        })
        .collect();
    let h = rgcn_stack(tape, ego, h0, &layers)?;
    let rows = offers
        .iter()
        .map(|&o| {
            ego.local(eg.offer_node(o))
                .map(|l| l as u32)
                .ok_or_else(|| Error::Graph(format!("offer {o} is outside the ego network")))
        })
        .collect::<Result<Vec<u32>>>()?;
    let x = tape.gather_rows(h, Arc::from(rows))?;
    let x = tape.affine(x, p.var("head1.w"), p.var("head1.b"))?;
    let x = tape.relu(x)?;
    let z = tape.affine(x, p.var("head2.w"), p.var("head2.b"))?;
    tape.sigmoid(z)
}
