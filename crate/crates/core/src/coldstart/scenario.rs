//! Cold-start masking of a test graph.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{EntityKind, HeteroGraph};
use crate::{Error, Result, NUM_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Full,
    NewOffer,
    NewSeller,
    NewSellerNewProduct,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Full,
        Scenario::NewOffer,
        Scenario::NewSeller,
        Scenario::NewSellerNewProduct,
    ];

    /// Short tag used in reports: `G_o`, `G_no`, `G_ns`, `G_nsnp`.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Full => "G_o",
            Self::NewOffer => "G_no",
            Self::NewSeller => "G_ns",
            Self::NewSellerNewProduct => "G_nsnp",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::NewOffer => "new_offer",
            Self::NewSeller => "new_seller",
            Self::NewSellerNewProduct => "new_seller_new_product",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s || x.tag() == s)
    }
}

/// Columns that survive masking, by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetainedColumns {
    pub seller: Vec<String>,
    pub product: Vec<String>,
    pub offer: Vec<String>,
}

impl RetainedColumns {
    /// Attributes known as soon as a listing is created.
    pub fn for_scenario(s: Scenario) -> Self {
        let mut r = Self::default();
        if s != Scenario::Full {
            r.offer.push("list_price".into());
        }
        if s == Scenario::NewSellerNewProduct {
            r.product.push("product_category".into());
        }
        r
    }

    fn resolve(&self, g: &HeteroGraph, kind: EntityKind) -> Result<Vec<usize>> {
        let names = match kind {
            EntityKind::Seller => &self.seller,
            EntityKind::Product => &self.product,
            EntityKind::Offer => &self.offer,
        };
        names
            .iter()
            .map(|n| {
                g.schema()
                    .column(kind, n)
                    .ok_or_else(|| Error::Config(format!("unknown retained {kind:?} column {n:?}")))
            })
            .collect()
    }
}

/// Everything needed to reproduce one masked test graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub seed: u64,
    pub retained: RetainedColumns,
    /// Sampled new offers, sorted.
    pub new_offers: Vec<usize>,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, seed: u64, new_offers: Vec<usize>) -> Self {
        let mut new_offers = new_offers;
        new_offers.sort_unstable();
        new_offers.dedup();
        Self {
            scenario,
            seed,
            retained: RetainedColumns::for_scenario(scenario),
            new_offers,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Per-class sampling rates for new offers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColdStartRates {
    pub minority_classes: Vec<usize>,
    pub minority_rate: f64,
    pub other_rate: f64,
}

impl Default for ColdStartRates {
    fn default() -> Self {
        Self {
            minority_classes: vec![1, 5, 6, 7],
            minority_rate: 0.25,
            other_rate: 0.01,
        }
    }
}

/// `ceil(rate * count)` offers per class, drawn without replacement; the
/// union over classes, sorted.
pub fn sample_cold_entities(g: &HeteroGraph, rates: &ColdStartRates, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeSet::new();
    for c in 0..NUM_CLASSES {
        let members: Vec<usize> = (0..g.num_offers())
            .filter(|&o| g.label(o).is_some_and(|l| l[c] == 1))
            .collect();
        if members.is_empty() {
            continue;
        }
        let rate = if rates.minority_classes.contains(&c) {
            rates.minority_rate
        } else {
            rates.other_rate
        };
        let k = ((rate * members.len() as f64).ceil() as usize).min(members.len());
        out.extend(
            sample(&mut rng, members.len(), k)
                .into_iter()
                .map(|i| members[i]),
        );
    }
    out.into_iter().collect()
}

/// A masked graph with its evaluation listings.
#[derive(Clone, Debug)]
pub struct MaskedGraph {
    pub graph: HeteroGraph,
    pub eval_offers: Vec<usize>,
    pub new_sellers: Vec<usize>,
    pub new_products: Vec<usize>,
    /// Offers whose features were masked.
    pub masked_offers: Vec<usize>,
}

fn zero_except(row: &mut [f32], keep: &[usize]) {
    for (c, v) in row.iter_mut().enumerate() {
        if !keep.contains(&c) {
            *v = 0.0;
        }
    }
}

/// Zero-fills the features of new entities, keeping retained columns, and
/// returns the listings to evaluate. Edges and labels are untouched.
pub fn apply_scenario(g: &HeteroGraph, spec: &ScenarioSpec) -> Result<MaskedGraph> {
    if let Some(&o) = spec.new_offers.iter().find(|&&o| o >= g.num_offers()) {
        return Err(Error::Graph(format!("new offer {o} out of range")));
    }
    let keep_s = spec.retained.resolve(g, EntityKind::Seller)?;
    let keep_p = spec.retained.resolve(g, EntityKind::Product)?;
    let keep_o = spec.retained.resolve(g, EntityKind::Offer)?;

    let mut new_sellers = BTreeSet::new();
    let mut new_products = BTreeSet::new();
    let mut masked = BTreeSet::new();
    match spec.scenario {
        Scenario::Full => {}
        Scenario::NewOffer => masked.extend(spec.new_offers.iter().copied()),
        Scenario::NewSeller | Scenario::NewSellerNewProduct => {
            for &o in &spec.new_offers {
                let (s, p) = g.offer_ends()[o];
                new_sellers.insert(s as usize);
                if spec.scenario == Scenario::NewSellerNewProduct {
                    new_products.insert(p as usize);
                }
            }
            for &s in &new_sellers {
                masked.extend(g.offers_of_seller(s).iter().map(|&o| o as usize));
            }
            for &p in &new_products {
                masked.extend(g.offers_of_product(p).iter().map(|&o| o as usize));
            }
        }
    }

    let mut out = g.clone();
    for &s in &new_sellers {
        zero_except(out.seller_features_mut().row_mut(s), &keep_s);
    }
    for &p in &new_products {
        zero_except(out.product_features_mut().row_mut(p), &keep_p);
    }
    for &o in &masked {
        zero_except(out.offer_features_mut().row_mut(o), &keep_o);
    }

    let eval_offers = match spec.scenario {
        Scenario::Full => g.labeled_offers(),
        _ => masked
            .iter()
            .copied()
            .filter(|&o| g.label(o).is_some())
            .collect(),
    };
    Ok(MaskedGraph {
        graph: out,
        eval_offers,
        new_sellers: new_sellers.into_iter().collect(),
        new_products: new_products.into_iter().collect(),
        masked_offers: masked.into_iter().collect(),
    })
}
