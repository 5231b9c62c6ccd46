//! Graph-free MLP on raw listing features, and the naive seller-fill variant.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Bound, Init, Params};
use crate::graph::{FeatureMatrix, HeteroGraph, NUM_SELLER_RELATIONS};
use crate::tensor::{Real, Tape, Var};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularArch {
    pub d_seller: usize,
    pub d_product: usize,
    pub d_offer: usize,
    pub hidden: usize,
}

impl TabularArch {
    pub fn for_graph(g: &HeteroGraph) -> Self {
        let (d_seller, d_product, d_offer) = g.schema().dims();
        Self {
            d_seller,
            d_product,
            d_offer,
            hidden: 64,
        }
    }

    pub fn input_width(&self) -> usize {
        self.d_seller + self.d_product + self.d_offer
    }

    pub fn init<R: Rng>(&self, outputs: usize, rng: &mut R) -> Params {
        mlp_init(self.input_width(), self.hidden, outputs, rng)
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

pub(crate) fn mlp_init<R: Rng>(input: usize, hidden: usize, outputs: usize, rng: &mut R) -> Params {
    let mut init = Init::new(rng);
    init.layer("fc1", input, hidden);
    init.layer("fc2", hidden, outputs);
    init.finish()
}

/// `sigmoid(relu(x W1 + b1) W2 + b2)`.
pub fn mlp_forward<T: Real>(tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
    let h = tape.affine(x, p.var("fc1.w"), p.var("fc1.b"))?;
    let h = tape.relu(h)?;
    let z = tape.affine(h, p.var("fc2.w"), p.var("fc2.b"))?;
    tape.sigmoid(z)
}

/// Rows `s ‖ p ‖ o` for every offer, using the given seller matrix.
pub fn listing_table_with(g: &HeteroGraph, sellers: &FeatureMatrix) -> FeatureMatrix {
    let (ds, dp, d_o) = g.schema().dims();
    let mut out = FeatureMatrix::new(ds + dp + d_o);
    let mut row = Vec::with_capacity(ds + dp + d_o);
    for (o, &(s, p)) in g.offer_ends().iter().enumerate() {
        row.clear();
        row.extend_from_slice(sellers.row(s as usize));
        row.extend_from_slice(g.product_features().row(p as usize));
        row.extend_from_slice(g.offer_features().row(o));
        out.push_row(&row).expect("fixed width");
    }
    out
}

pub fn listing_table(g: &HeteroGraph) -> FeatureMatrix {
    listing_table_with(g, g.seller_features())
}

/// Seller features where each new seller takes the plain mean of its
/// distinct seller neighbors over all seller-seller relations. Means are
/// taken over the input features, so fill order does not matter.
pub fn naive_fill_seller_features(g: &HeteroGraph, new_sellers: &[usize]) -> FeatureMatrix {
    let src = g.seller_features();
    let mut out = src.clone();
    for &s in new_sellers {
        let mut union = BTreeSet::new();
        for r in 0..NUM_SELLER_RELATIONS {
            union.extend(g.seller_neighbors(s, r).iter().copied());
        }
        let ns: Vec<u32> = union.into_iter().collect();
        if ns.is_empty() {
            continue;
        }
        let mean = src.mean_of(&ns);
        out.row_mut(s).copy_from_slice(&mean);
    }
    out
}
