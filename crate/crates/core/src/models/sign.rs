//! Precomputed multi-hop neighbor averages fed to a tabular MLP.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tabular::mlp_init;
use crate::graph::{FeatureMatrix, HeteroGraph};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignArch {
    pub d_seller: usize,
    pub d_product: usize,
    pub d_offer: usize,
    pub hops: usize,
    pub hidden: usize,
}

impl SignArch {
    pub fn for_graph(g: &HeteroGraph, hops: usize) -> Self {
        let (d_seller, d_product, d_offer) = g.schema().dims();
        Self {
            d_seller,
            d_product,
            d_offer,
            hops,
            hidden: 64,
        }
    }

    fn joint(&self) -> usize {
        self.d_seller + self.d_product
    }

    pub fn input_width(&self) -> usize {
        self.d_seller + self.d_product + 2 * self.hops * self.joint() + self.d_offer
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

/// Per node `x ‖ A X ‖ … ‖ A^K X`, sellers then products.
///
/// `X` places seller columns before product columns, each node zero in the
/// other kind's block. `(A Y)_v` is the mean over relations in which `v` has
/// neighbors of the mean neighbor row. The hop-0 block keeps the node's own
/// native columns.
pub fn sign_precompute(g: &HeteroGraph, k: usize) -> (FeatureMatrix, FeatureMatrix) {
    let (ds, dp, _) = g.schema().dims();
    let ns = g.num_sellers();
    let n = ns + g.num_products();
    let d = ds + dp;
    let topo = g.topology();

    let mut y = vec![0.0f64; n * d];
    for s in 0..ns {
        for (c, &v) in g.seller_features().row(s).iter().enumerate() {
            y[s * d + c] = v as f64;
        }
    }
    for p in 0..g.num_products() {
        for (c, &v) in g.product_features().row(p).iter().enumerate() {
            y[(ns + p) * d + ds + c] = v as f64;
        }
    }

    let mut powers = Vec::with_capacity(k);
    for _ in 0..k {
        let mut next = vec![0.0f64; n * d];
        let mut rel_mean = vec![0.0f64; d];
        for v in 0..n {
            let out = &mut next[v * d..(v + 1) * d];
            let mut active = 0usize;
            for r in 0..topo.num_relations() {
                let nb = topo.neighbors(v, r);
                if nb.is_empty() {
                    continue;
                }
                active += 1;
                rel_mean.fill(0.0);
                for &u in nb {
                    for (m, &x) in rel_mean
                        .iter_mut()
                        .zip(&y[u as usize * d..(u as usize + 1) * d])
                    {
                        *m += x;
                    }
                }
                let inv = 1.0 / nb.len() as f64;
                for (o, m) in out.iter_mut().zip(&rel_mean) {
                    *o += m * inv;
                }
            }
            if active > 1 {
                let inv = 1.0 / active as f64;
                out.iter_mut().for_each(|o| *o *= inv);
            }
        }
        powers.push(next.clone());
        y = next;
    }

    let build = |count: usize, offset: usize, own: &FeatureMatrix| {
        let mut m = FeatureMatrix::new(own.cols() + k * d);
        let mut row = Vec::with_capacity(own.cols() + k * d);
        for i in 0..count {
            row.clear();
            row.extend_from_slice(own.row(i));
            for pw in &powers {
                let v = offset + i;
                row.extend(pw[v * d..(v + 1) * d].iter().map(|&x| x as f32));
            }
            m.push_row(&row).expect("fixed width");
        }
        m
    };
    (
        build(ns, 0, g.seller_features()),
        build(g.num_products(), ns, g.product_features()),
    )
}

/// Rows `aug_s ‖ aug_p ‖ o` for every offer.
pub fn sign_table(g: &HeteroGraph, k: usize) -> FeatureMatrix {
    let (sa, pa) = sign_precompute(g, k);
    let d_o = g.offer_features().cols();
    let mut out = FeatureMatrix::new(sa.cols() + pa.cols() + d_o);
    let mut row = Vec::new();
    for (o, &(s, p)) in g.offer_ends().iter().enumerate() {
        row.clear();
        row.extend_from_slice(sa.row(s as usize));
        row.extend_from_slice(pa.row(p as usize));
        row.extend_from_slice(g.offer_features().row(o));
        out.push_row(&row).expect("fixed width");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeRef, NodeType, RelationTag};

    #[test]
    fn no_edges_gives_zero_hops() {
        let mut g = HeteroGraph::with_dims(2, 1, 1);
        g.add_node(NodeType::Seller, &[1.0, 2.0]).unwrap();
        g.add_node(NodeType::Product, &[3.0]).unwrap();
        let (s, p) = sign_precompute(&g, 3);
        assert_eq!(s.row(0)[..2], [1.0, 2.0]);
        assert!(s.row(0)[2..].iter().all(|&v| v == 0.0));
        assert_eq!(p.row(0)[0], 3.0);
        assert!(p.row(0)[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_edge_copies_neighbor() {
        let mut g = HeteroGraph::with_dims(2, 1, 1);
        g.add_node(NodeType::Seller, &[1.0, 2.0]).unwrap();
        g.add_node(NodeType::Seller, &[5.0, 7.0]).unwrap();
        g.add_edge(
            RelationTag::seller_seller(2).unwrap(),
            NodeRef::seller(0),
            NodeRef::seller(1),
            None,
        )
        .unwrap();
        let (s, _) = sign_precompute(&g, 2);
        // hop 1 of seller 0 is seller 1's row in the joint space
        assert_eq!(&s.row(0)[2..5], &[5.0, 7.0, 0.0]);
        // hop 2 comes back to itself
        assert_eq!(&s.row(0)[5..8], &[1.0, 2.0, 0.0]);
    }

    #[test]
    fn zero_hops_is_the_listing_table() {
        let mut g = HeteroGraph::with_dims(1, 1, 1);
        g.add_node(NodeType::Seller, &[1.0]).unwrap();
        g.add_node(NodeType::Product, &[2.0]).unwrap();
        g.add_offer(0, 0, &[3.0]).unwrap();
        assert_eq!(sign_table(&g, 0), crate::models::listing_table(&g));
    }
}
