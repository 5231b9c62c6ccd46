//! Heterogeneous seller–product graph.
//!
//! Sellers and products are nodes with dense per-type indices. Offers are
//! feature-bearing edges under a dedicated relation; eight further relations
//! connect sellers to sellers. All relations are undirected for propagation.

mod expanded;
mod features;
mod io;
mod topology;
mod validate;

pub use expanded::{build_expanded_graph, ExpandedGraph, OFFER_PRODUCT, OFFER_SELLER};
pub use features::FeatureMatrix;
pub use io::{load_graph, save_graph, FORMAT_VERSION};
pub use topology::Topology;
pub use validate::{validate, Violation};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, NUM_CLASSES};

pub const NUM_RELATIONS: usize = 9;
pub const NUM_SELLER_RELATIONS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeType {
    Seller,
    Product,
}

impl NodeType {
    pub fn name(self) -> &'static str {
        match self {
            NodeType::Seller => "seller",
            NodeType::Product => "product",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "seller" => Some(NodeType::Seller),
            "product" => Some(NodeType::Product),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub node_type: NodeType,
    pub index: u32,
}

impl NodeRef {
    pub fn seller(index: usize) -> Self {
        Self {
            node_type: NodeType::Seller,
            index: index as u32,
        }
    }

    pub fn product(index: usize) -> Self {
        Self {
            node_type: NodeType::Product,
            index: index as u32,
        }
    }

    pub fn idx(self) -> usize {
        self.index as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationKind {
    SellerSeller(u8),
    Offer,
}

/// One of the nine relations; id 8 is the offer relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationTag(u8);

impl RelationTag {
    pub const OFFER: RelationTag = RelationTag(8);

    pub fn from_id(id: usize) -> Result<Self> {
        if id < NUM_RELATIONS {
            Ok(Self(id as u8))
        } else {
            Err(Error::Graph(format!(
                "relation id {id} outside 0..{NUM_RELATIONS}"
            )))
        }
    }

    pub fn seller_seller(k: usize) -> Result<Self> {
        if k < NUM_SELLER_RELATIONS {
            Ok(Self(k as u8))
        } else {
            Err(Error::Graph(format!(
                "seller relation {k} outside 0..{NUM_SELLER_RELATIONS}"
            )))
        }
    }

    pub fn all() -> [RelationTag; NUM_RELATIONS] {
        std::array::from_fn(|i| RelationTag(i as u8))
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn kind(self) -> RelationKind {
        if self == Self::OFFER {
            RelationKind::Offer
        } else {
            RelationKind::SellerSeller(self.0)
        }
    }

    pub fn name(self) -> String {
        match self.kind() {
            RelationKind::Offer => "offer".to_string(),
            RelationKind::SellerSeller(k) => format!("seller_seller_{k}"),
        }
    }
}

/// Named feature columns per entity kind; widths are the feature dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSchema {
    pub seller: Vec<String>,
    pub product: Vec<String>,
    pub offer: Vec<String>,
}

impl FeatureSchema {
    /// Generic column names `prefix0..prefixN`, with optional named leaders.
    pub fn with_dims(d_seller: usize, d_product: usize, d_offer: usize) -> Self {
        let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect();
        Self {
            seller: names("s", d_seller),
            product: names("p", d_product),
            offer: names("o", d_offer),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.seller.len(), self.product.len(), self.offer.len())
    }

    pub fn column(&self, kind: EntityKind, name: &str) -> Option<usize> {
        self.columns(kind).iter().position(|c| c == name)
    }

    pub fn columns(&self, kind: EntityKind) -> &[String] {
        match kind {
            EntityKind::Seller => &self.seller,
            EntityKind::Product => &self.product,
            EntityKind::Offer => &self.offer,
        }
    }
}

/// Entities that carry feature rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Seller,
    Product,
    Offer,
}

/// 0/1 label vector of one listing.
pub type Label = [u8; NUM_CLASSES];

/// An offer listing `<seller, offer, product>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Listing {
    pub seller: NodeRef,
    pub offer: usize,
    pub product: NodeRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub relation: RelationTag,
    pub src: NodeRef,
    pub dst: NodeRef,
}

/// Unchecked components of a graph, as read from disk.
#[derive(Clone, Debug)]
pub struct GraphParts {
    pub schema: FeatureSchema,
    pub seller_features: FeatureMatrix,
    pub product_features: FeatureMatrix,
    /// One row per offer edge, in edge order.
    pub offer_features: FeatureMatrix,
    pub edges: Vec<EdgeRecord>,
    pub labels: Vec<Option<Label>>,
}

#[derive(Clone, Debug)]
pub struct HeteroGraph {
    schema: FeatureSchema,
    seller_features: FeatureMatrix,
    product_features: FeatureMatrix,
    offer_features: FeatureMatrix,
    /// `(seller, product)` per offer.
    offer_ends: Vec<(u32, u32)>,
    labels: Vec<Option<Label>>,
    /// Per seller: sorted seller neighbors for relations 0..8, sorted products at 8.
    seller_adj: Vec<[Vec<u32>; NUM_RELATIONS]>,
    /// Per product: sorted sellers under the offer relation.
    product_adj: Vec<Vec<u32>>,
    seller_offers: Vec<Vec<u32>>,
    product_offers: Vec<Vec<u32>>,
    edges: Vec<EdgeRecord>,
    topology: OnceLock<Topology>,
}

impl HeteroGraph {
    pub fn new(schema: FeatureSchema) -> Self {
        let (ds, dp, d_o) = schema.dims();
        Self {
            schema,
            seller_features: FeatureMatrix::new(ds),
            product_features: FeatureMatrix::new(dp),
            offer_features: FeatureMatrix::new(d_o),
            offer_ends: Vec::new(),
            labels: Vec::new(),
            seller_adj: Vec::new(),
            product_adj: Vec::new(),
            seller_offers: Vec::new(),
            product_offers: Vec::new(),
            edges: Vec::new(),
            topology: OnceLock::new(),
        }
    }

    /// Empty graph with generic column names.
    pub fn with_dims(d_seller: usize, d_product: usize, d_offer: usize) -> Self {
        Self::new(FeatureSchema::with_dims(d_seller, d_product, d_offer))
    }

    /// Builds adjacency from an edge list without rejecting duplicates or bad
    /// values; run [`validate`] on the result.
    pub fn from_parts(parts: GraphParts) -> Result<Self> {
        let GraphParts {
            schema,
            seller_features,
            product_features,
            offer_features,
            edges,
            labels,
        } = parts;
        let (ds, dp, d_o) = schema.dims();
        if seller_features.cols() != ds
            || product_features.cols() != dp
            || offer_features.cols() != d_o
        {
            return Err(Error::Graph("feature widths differ from schema".into()));
        }
        let mut g = Self::new(schema);
        g.seller_features = seller_features;
        g.product_features = product_features;
        g.seller_adj = vec![Default::default(); g.seller_features.rows()];
        g.product_adj = vec![Vec::new(); g.product_features.rows()];
        g.seller_offers = vec![Vec::new(); g.seller_features.rows()];
        g.product_offers = vec![Vec::new(); g.product_features.rows()];
        for e in &edges {
            let (s, d) = g.check_endpoints(e.relation, e.src, e.dst)?;
            match e.relation.kind() {
                RelationKind::SellerSeller(k) => {
                    g.seller_adj[s.idx()][k as usize].push(d.index);
                    g.seller_adj[d.idx()][k as usize].push(s.index);
                }
                RelationKind::Offer => {
                    let offer = g.offer_ends.len() as u32;
                    g.offer_ends.push((s.index, d.index));
                    g.seller_adj[s.idx()][RelationTag::OFFER.id()].push(d.index);
                    g.product_adj[d.idx()].push(s.index);
                    g.seller_offers[s.idx()].push(offer);
                    g.product_offers[d.idx()].push(offer);
                }
            }
        }
        if offer_features.rows() != g.offer_ends.len() {
            return Err(Error::Graph(format!(
                "{} offer feature rows for {} offer edges",
                offer_features.rows(),
                g.offer_ends.len()
            )));
        }
        if labels.len() != g.offer_ends.len() {
            return Err(Error::Graph(format!(
                "{} label rows for {} offers",
                labels.len(),
                g.offer_ends.len()
            )));
        }
        for lists in &mut g.seller_adj {
            for l in lists.iter_mut() {
                l.sort_unstable();
            }
        }
        for l in &mut g.product_adj {
            l.sort_unstable();
        }
        g.offer_features = offer_features;
        g.labels = labels;
        g.edges = edges;
        Ok(g)
    }

    pub fn into_parts(self) -> GraphParts {
        GraphParts {
            schema: self.schema,
            seller_features: self.seller_features,
            product_features: self.product_features,
            offer_features: self.offer_features,
            edges: self.edges,
            labels: self.labels,
        }
    }

    fn invalidate(&mut self) {
        self.topology = OnceLock::new();
    }

    pub fn add_node(&mut self, node_type: NodeType, features: &[f32]) -> Result<NodeRef> {
        self.invalidate();
        match node_type {
            NodeType::Seller => {
                self.seller_features.push_row(features)?;
                self.seller_adj.push(Default::default());
                self.seller_offers.push(Vec::new());
                Ok(NodeRef::seller(self.seller_features.rows() - 1))
            }
            NodeType::Product => {
                self.product_features.push_row(features)?;
                self.product_adj.push(Vec::new());
                self.product_offers.push(Vec::new());
                Ok(NodeRef::product(self.product_features.rows() - 1))
            }
        }
    }

    /// Endpoints normalized so offers run seller -> product.
    fn check_endpoints(
        &self,
        relation: RelationTag,
        src: NodeRef,
        dst: NodeRef,
    ) -> Result<(NodeRef, NodeRef)> {
        for v in [src, dst] {
            if !self.contains(v) {
                return Err(Error::Graph(format!("{v:?} does not exist")));
            }
        }
        match relation.kind() {
            RelationKind::SellerSeller(_) => {
                if src.node_type != NodeType::Seller || dst.node_type != NodeType::Seller {
                    return Err(Error::Graph(format!(
                        "{} connects sellers only, got {src:?} and {dst:?}",
                        relation.name()
                    )));
                }
                if src == dst {
                    return Err(Error::Graph(format!("self-loop on {src:?}")));
                }
                Ok((src, dst))
            }
            RelationKind::Offer => match (src.node_type, dst.node_type) {
                (NodeType::Seller, NodeType::Product) => Ok((src, dst)),
                (NodeType::Product, NodeType::Seller) => Ok((dst, src)),
                _ => Err(Error::Graph(format!(
                    "offer must join a seller and a product, got {src:?} and {dst:?}"
                ))),
            },
        }
    }

    /// Adds an undirected edge; offer edges take a feature row. Returns the edge index.
    pub fn add_edge(
        &mut self,
        relation: RelationTag,
        src: NodeRef,
        dst: NodeRef,
        offer_features: Option<&[f32]>,
    ) -> Result<usize> {
        let (s, d) = self.check_endpoints(relation, src, dst)?;
        let is_offer = relation == RelationTag::OFFER;
        match (is_offer, offer_features) {
            (true, None) => return Err(Error::Graph("offer edge needs a feature row".into())),
            (false, Some(_)) => {
                return Err(Error::Graph(format!(
                    "{} edges carry no features",
                    relation.name()
                )))
            }
            _ => {}
        }
        if let Some(f) = offer_features {
            if f.len() != self.offer_features.cols() {
                return Err(Error::Graph(format!(
                    "offer features have width {}, expected {}",
                    f.len(),
                    self.offer_features.cols()
                )));
            }
        }
        let list = &self.seller_adj[s.idx()][relation.id()];
        if list.binary_search(&d.index).is_ok() {
            return Err(Error::Graph(format!(
                "duplicate {} edge between {s:?} and {d:?}",
                relation.name()
            )));
        }
        self.invalidate();
        if let Some(f) = offer_features {
            self.offer_features.push_row(f)?;
            let offer = self.offer_ends.len() as u32;
            self.offer_ends.push((s.index, d.index));
            self.labels.push(None);
            insert_sorted(&mut self.seller_adj[s.idx()][relation.id()], d.index);
            insert_sorted(&mut self.product_adj[d.idx()], s.index);
            self.seller_offers[s.idx()].push(offer);
            self.product_offers[d.idx()].push(offer);
        } else {
            insert_sorted(&mut self.seller_adj[s.idx()][relation.id()], d.index);
            insert_sorted(&mut self.seller_adj[d.idx()][relation.id()], s.index);
        }
        self.edges.push(EdgeRecord {
            relation,
            src: s,
            dst: d,
        });
        Ok(self.edges.len() - 1)
    }

    /// Adds an offer edge and returns its offer index.
    pub fn add_offer(&mut self, seller: usize, product: usize, features: &[f32]) -> Result<usize> {
        self.add_edge(
            RelationTag::OFFER,
            NodeRef::seller(seller),
            NodeRef::product(product),
            Some(features),
        )?;
        Ok(self.offer_ends.len() - 1)
    }

    pub fn set_label(&mut self, offer: usize, label: Label) -> Result<()> {
        let slot = self
            .labels
            .get_mut(offer)
            .ok_or_else(|| Error::Graph(format!("offer {offer} does not exist")))?;
        if label.iter().any(|&v| v > 1) {
            return Err(Error::Graph("labels must be 0 or 1".into()));
        }
        *slot = Some(label);
        Ok(())
    }

    pub fn contains(&self, v: NodeRef) -> bool {
        v.idx() < self.count(v.node_type)
    }

    pub fn count(&self, t: NodeType) -> usize {
        match t {
            NodeType::Seller => self.seller_features.rows(),
            NodeType::Product => self.product_features.rows(),
        }
    }

    pub fn num_sellers(&self) -> usize {
        self.seller_features.rows()
    }

    pub fn num_products(&self) -> usize {
        self.product_features.rows()
    }

    pub fn num_offers(&self) -> usize {
        self.offer_ends.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_seller_edges(&self) -> usize {
        self.edges.len() - self.offer_ends.len()
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Sorted neighbors of `v` under `r`.
    pub fn neighbors(&self, v: NodeRef, r: RelationTag) -> Vec<NodeRef> {
        match (v.node_type, r.kind()) {
            (NodeType::Seller, RelationKind::SellerSeller(k)) => self.seller_adj[v.idx()]
                [k as usize]
                .iter()
                .map(|&i| NodeRef::seller(i as usize))
                .collect(),
            (NodeType::Seller, RelationKind::Offer) => self.seller_adj[v.idx()][r.id()]
                .iter()
                .map(|&i| NodeRef::product(i as usize))
                .collect(),
            (NodeType::Product, RelationKind::Offer) => self.product_adj[v.idx()]
                .iter()
                .map(|&i| NodeRef::seller(i as usize))
                .collect(),
            (NodeType::Product, RelationKind::SellerSeller(_)) => Vec::new(),
        }
    }

    /// Seller neighbors of a seller under a seller–seller relation.
    pub fn seller_neighbors(&self, seller: usize, relation: usize) -> &[u32] {
        &self.seller_adj[seller][relation]
    }

    pub fn listing(&self, offer: usize) -> Listing {
        let (s, p) = self.offer_ends[offer];
        Listing {
            seller: NodeRef::seller(s as usize),
            offer,
            product: NodeRef::product(p as usize),
        }
    }

    pub fn offer_ends(&self) -> &[(u32, u32)] {
        &self.offer_ends
    }

    pub fn offers_of_seller(&self, seller: usize) -> &[u32] {
        &self.seller_offers[seller]
    }

    pub fn offers_of_product(&self, product: usize) -> &[u32] {
        &self.product_offers[product]
    }

    /// Other offers sharing the seller, and other offers sharing the product.
    pub fn incident_offer_sets(&self, offer: usize) -> (Vec<u32>, Vec<u32>) {
        let (s, p) = self.offer_ends[offer];
        let others = |list: &[u32]| {
            list.iter()
                .copied()
                .filter(|&o| o as usize != offer)
                .collect()
        };
        (
            others(&self.seller_offers[s as usize]),
            others(&self.product_offers[p as usize]),
        )
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

    pub fn seller_features_mut(&mut self) -> &mut FeatureMatrix {
        &mut self.seller_features
    }

    pub fn product_features_mut(&mut self) -> &mut FeatureMatrix {
        &mut self.product_features
    }

    pub fn offer_features_mut(&mut self) -> &mut FeatureMatrix {
        &mut self.offer_features
    }

    pub fn features(&self, kind: EntityKind) -> &FeatureMatrix {
        match kind {
            EntityKind::Seller => &self.seller_features,
            EntityKind::Product => &self.product_features,
            EntityKind::Offer => &self.offer_features,
        }
    }

    pub fn features_mut(&mut self, kind: EntityKind) -> &mut FeatureMatrix {
        match kind {
            EntityKind::Seller => &mut self.seller_features,
            EntityKind::Product => &mut self.product_features,
            EntityKind::Offer => &mut self.offer_features,
        }
    }

    pub fn label(&self, offer: usize) -> Option<&Label> {
        self.labels.get(offer).and_then(|l| l.as_ref())
    }

    pub fn labels(&self) -> &[Option<Label>] {
        &self.labels
    }

    pub fn labeled_offers(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&o| self.labels[o].is_some())
            .collect()
    }

    /// Global node index: sellers first, then products.
    pub fn global_index(&self, v: NodeRef) -> usize {
        match v.node_type {
            NodeType::Seller => v.idx(),
            NodeType::Product => self.num_sellers() + v.idx(),
        }
    }

    pub fn node_at(&self, global: usize) -> NodeRef {
        if global < self.num_sellers() {
            NodeRef::seller(global)
        } else {
            NodeRef::product(global - self.num_sellers())
        }
    }

    /// Frozen CSR view over global indices, built on first use.
    pub fn topology(&self) -> &Topology {
        self.topology.get_or_init(|| Topology::from_graph(self))
    }
}

fn insert_sorted(list: &mut Vec<u32>, v: u32) {
    let pos = list.binary_search(&v).unwrap_or_else(|p| p);
    list.insert(pos, v);
}
