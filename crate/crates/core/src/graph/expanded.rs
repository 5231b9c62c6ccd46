use super::{FeatureMatrix, HeteroGraph, Label, Topology, NUM_SELLER_RELATIONS};

/// Relation joining an offer node to its seller.
pub const OFFER_SELLER: usize = NUM_SELLER_RELATIONS;
/// Relation joining an offer node to its product.
pub const OFFER_PRODUCT: usize = NUM_SELLER_RELATIONS + 1;

/// The alternative layout where every offer is a node of its own, linked to
/// its seller and its product by two edges.
#[derive(Clone, Debug)]
pub struct ExpandedGraph {
    topology: Topology,
    seller_features: FeatureMatrix,
    product_features: FeatureMatrix,
    offer_features: FeatureMatrix,
    labels: Vec<Option<Label>>,
    num_seller_edges: usize,
}

/// Offer edges become offer nodes carrying the edge features and labels.
pub fn build_expanded_graph(g: &HeteroGraph) -> ExpandedGraph {
    let (ns, np, no) = (g.num_sellers(), g.num_products(), g.num_offers());
    let offer_base = (ns + np) as u32;
    let topo = Topology::build(&[ns, np, no], NUM_SELLER_RELATIONS + 2, |v, r| {
        if v < ns {
            match r {
                r if r < NUM_SELLER_RELATIONS => g.seller_neighbors(v, r).to_vec(),
                OFFER_SELLER => g
                    .offers_of_seller(v)
                    .iter()
                    .map(|&o| offer_base + o)
                    .collect(),
                _ => Vec::new(),
            }
        } else if v < ns + np {
            if r == OFFER_PRODUCT {
                g.offers_of_product(v - ns)
                    .iter()
                    .map(|&o| offer_base + o)
                    .collect()
            } else {
                Vec::new()
            }
        } else {
            let (s, p) = g.offer_ends()[v - ns - np];
            match r {
                OFFER_SELLER => vec![s],
                OFFER_PRODUCT => vec![ns as u32 + p],
                _ => Vec::new(),
            }
        }
    });
    ExpandedGraph {
        topology: topo,
        seller_features: g.seller_features().clone(),
        product_features: g.product_features().clone(),
        offer_features: g.offer_features().clone(),
        labels: g.labels().to_vec(),
        num_seller_edges: g.num_seller_edges(),
    }
}

impl ExpandedGraph {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn num_sellers(&self) -> usize {
        self.seller_features.rows()
    }

    pub fn num_products(&self) -> usize {
        self.product_features.rows()
    }

    pub fn num_offer_nodes(&self) -> usize {
        self.offer_features.rows()
    }

    /// Global index of the node standing for `offer`.
    pub fn offer_node(&self, offer: usize) -> usize {
        self.num_sellers() + self.num_products() + offer
    }

    pub fn num_seller_edges(&self) -> usize {
        self.num_seller_edges
    }

    /// Edges touching an offer node.
    pub fn num_offer_incident_edges(&self) -> usize {
        let t = &self.topology;
        (t.num_nodes() - self.num_offer_nodes()..t.num_nodes())
            .map(|v| t.degree(v, OFFER_SELLER) + t.degree(v, OFFER_PRODUCT))
            .sum()
    }

    pub fn num_edges(&self) -> usize {
        self.num_seller_edges + self.num_offer_incident_edges()
    }

    pub fn seller_features(&self) -> &FeatureMatrix {
        &self.seller_features
    }

    pub fn product_features(&self) -> &FeatureMatrix {
        &self.product_features
    }

    pub fn offer_features(&self) -> &FeatureMatrix {
        &self.offer_features
    }

    pub fn labels(&self) -> &[Option<Label>] {
        &self.labels
    }
}
