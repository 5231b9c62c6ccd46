//! Planted-community marketplace generator.
//!
//! A "world" (seeded by `world_seed`) fixes the community feature centroids,
//! the class centroids of offers and each community's class profile. The
//! instance seed then draws sellers, products, edges, offers, noise and
//! labels, so two seeds under one world give independent snapshots of the
//! same marketplace.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::graph::{
    FeatureSchema, HeteroGraph, NodeRef, NodeType, RelationTag, NUM_SELLER_RELATIONS,
};
use crate::{Error, Result, NUM_CLASSES};

/// Index of the Normal class.
pub const NORMAL_CLASS: usize = NUM_CLASSES - 1;

const WORLD_POOL: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockProbability {
    pub intra: f64,
    pub inter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub sellers: usize,
    pub products: usize,
    pub communities: usize,
    /// Seller–seller edge probabilities for each of the eight relations.
    pub relations: Vec<BlockProbability>,
    /// Mean offers per seller; every seller lists at least one product.
    pub offers_per_seller: f64,
    /// Chance an offer's product comes from the seller's own community.
    pub product_affinity: f64,
    pub product_categories: usize,
    pub d_seller: usize,
    pub d_product: usize,
    pub d_offer: usize,
    /// Per-community class probabilities over the eight defect types; the
    /// remainder goes to Normal. Cycled when there are more communities.
    pub class_profiles: Vec<Vec<f64>>,
    /// Chance an offer takes its seller's habitual class instead of a fresh
    /// draw from the community profile. Class marginals are unchanged.
    pub seller_persistence: f64,
    pub seller_signal: f64,
    pub product_signal: f64,
    pub offer_signal: f64,
    pub price_signal: f64,
    pub noise: f64,
    pub seed: u64,
    pub world_seed: u64,
}

/// Profiles cycled over communities: mostly clean, with recurring hot spots.
pub fn default_class_profiles() -> Vec<Vec<f64>> {
    let base = 0.01;
    let clean = vec![base; NUM_CLASSES - 1];
    let risky = |k: usize, rate: f64| {
        let mut p = clean.clone();
        p[k] = rate;
        p
    };
    vec![
        clean.clone(),
        risky(0, 0.3),
        clean.clone(),
        risky(2, 0.3),
        risky(1, 0.25),
        clean.clone(),
        risky(3, 0.3),
        clean.clone(),
        risky(4, 0.3),
        risky(5, 0.25),
        clean.clone(),
        risky(0, 0.3),
        clean.clone(),
        risky(2, 0.3),
        risky(6, 0.25),
        clean.clone(),
        risky(3, 0.3),
        clean.clone(),
        risky(4, 0.3),
        risky(7, 0.25),
    ]
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            sellers: 5000,
            products: 5000,
            communities: 50,
            relations: (0..NUM_SELLER_RELATIONS)
                .map(|r| BlockProbability {
                    intra: [0.02, 0.015, 0.01, 0.01, 0.008, 0.008, 0.005, 0.005][r],
                    inter: 2e-5,
                })
                .collect(),
            offers_per_seller: 4.0,
            product_affinity: 0.6,
            product_categories: 10,
            d_seller: 16,
            d_product: 8,
            d_offer: 8,
            class_profiles: default_class_profiles(),
            seller_persistence: 0.9,
            seller_signal: 1.0,
            product_signal: 1.0,
            offer_signal: 1.0,
            price_signal: 0.3,
            noise: 1.0,
            seed: 42,
            world_seed: 2023,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sellers == 0 {
            return bad("sellers must be positive".into());
        }
        if self.products == 0 {
            return bad("every seller lists products, so products must be positive".into());
        }
        if self.communities == 0 || self.communities > self.sellers {
            return bad(format!("communities must be in 1..={}", self.sellers));
        }
        if self.relations.len() != NUM_SELLER_RELATIONS {
            return bad(format!(
                "need {NUM_SELLER_RELATIONS} relation probabilities"
            ));
        }
        for (r, p) in self.relations.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.intra) || !(0.0..=1.0).contains(&p.inter) {
                return bad(format!("relation {r} probabilities must lie in [0, 1]"));
            }
        }
        if self.offers_per_seller.is_nan() || self.offers_per_seller < 1.0 {
            return bad("offers_per_seller must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.product_affinity) {
            return bad("product_affinity must lie in [0, 1]".into());
        }
        if self.d_offer == 0 || self.d_product == 0 {
            return bad("offers need a list_price column and products a category column".into());
        }
        if self.product_categories == 0 {
            return bad("product_categories must be positive".into());
        }
        if self.class_profiles.is_empty() {
            return bad("class_profiles must not be empty".into());
        }
        for (i, p) in self.class_profiles.iter().enumerate() {
            if p.len() != NUM_CLASSES - 1 {
                return bad(format!(
                    "class profile {i} needs {} defect rates",
                    NUM_CLASSES - 1
                ));
            }
            let total: f64 = p.iter().sum();
            if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) || total > 1.0 + 1e-9 {
                return bad(format!(
                    "class profile {i} must be probabilities summing to at most 1"
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.seller_persistence) {
            return bad("seller_persistence must lie in [0, 1]".into());
        }
        if self.noise.is_nan() || self.noise < 0.0 {
            return bad("noise must be non-negative".into());
        }
        Ok(())
    }

    /// Expected edge count (seller–seller plus offers).
    pub fn expected_edges(&self) -> f64 {
        let n = self.sellers as f64;
        let c = self.communities as f64;
        let size = n / c;
        let intra_pairs = c * size * (size - 1.0) / 2.0;
        let inter_pairs = n * (n - 1.0) / 2.0 - intra_pairs;
        let seller_edges: f64 = self
            .relations
            .iter()
            .map(|p| p.intra * intra_pairs + p.inter * inter_pairs)
            .sum();
        seller_edges + n * self.offers_per_seller
    }

    /// Same world and densities, resized to roughly `edges` edges. Community
    /// size is kept, and cross-community probabilities shrink with the
    /// seller count so the expected inter-community degree is unchanged.
    pub fn scaled_to_edges(&self, edges: usize) -> Self {
        let per_seller = self.expected_edges() / self.sellers as f64;
        let sellers =
            ((edges as f64 / per_seller).round() as usize).max(self.sellers / self.communities);
        let ratio = sellers as f64 / self.sellers as f64;
        let mut out = self.clone();
        out.sellers = sellers;
        out.products = ((self.products as f64 * ratio).round() as usize).max(1);
        out.communities = ((self.communities as f64 * ratio).round() as usize).clamp(1, sellers);
        for p in &mut out.relations {
            p.inter = (p.inter / ratio).min(1.0);
        }
        out
    }

    pub fn schema(&self) -> FeatureSchema {
        let mut s = FeatureSchema::with_dims(self.d_seller, self.d_product, self.d_offer);
        s.product[0] = "product_category".into();
        s.offer[0] = "list_price".into();
        s
    }

    fn profile(&self, community: usize) -> &[f64] {
        &self.class_profiles[community % self.class_profiles.len()]
    }
}

struct World {
    seller_centroids: Vec<Vec<f64>>,
    product_centroids: Vec<Vec<f64>>,
    class_centroids: Vec<Vec<f64>>,
    price_shift: Vec<f64>,
    category_of: Vec<usize>,
}

fn unit_normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let n = Normal::new(0.0, 1.0).unwrap();
    (0..d).map(|_| n.sample(rng)).collect()
}

impl World {
    fn new(cfg: &GeneratorConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.world_seed);
        // a fixed pool, so resized graphs share the same world
        let pool = WORLD_POOL;
        let seller_centroids = (0..pool)
            .map(|_| unit_normal_vec(&mut rng, cfg.d_seller))
            .collect();
        let product_centroids = (0..pool)
            .map(|_| unit_normal_vec(&mut rng, cfg.d_product.saturating_sub(1)))
            .collect();
        let class_centroids = (0..NUM_CLASSES)
            .map(|c| {
                if c == NORMAL_CLASS {
                    vec![0.0; cfg.d_offer - 1]
                } else {
                    unit_normal_vec(&mut rng, cfg.d_offer - 1)
                }
            })
            .collect();
        let price_shift = (0..NUM_CLASSES)
            .map(|c| {
                if c == NORMAL_CLASS {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let category_of = (0..pool)
            .map(|_| rng.random_range(0..cfg.product_categories))
            .collect();
        Self {
            seller_centroids,
            product_centroids,
            class_centroids,
            price_shift,
            category_of,
        }
    }

    fn seller_centroid(&self, c: usize) -> &[f64] {
        &self.seller_centroids[c % self.seller_centroids.len()]
    }

    fn product_centroid(&self, c: usize) -> &[f64] {
        &self.product_centroids[c % self.product_centroids.len()]
    }

    fn category(&self, c: usize) -> usize {
        self.category_of[c % self.category_of.len()]
    }
}

/// Community of every member when `n` items are split into `k` contiguous,
/// near-equal blocks. Returns block start offsets of length `k + 1`.
fn blocks(n: usize, k: usize) -> Vec<usize> {
    (0..=k).map(|i| i * n / k).collect()
}

/// Calls `f(i, j)` for each pair `i < j` of `0..n` kept with probability `p`,
/// skipping geometrically so the cost follows the number of kept pairs.
fn sample_pairs(rng: &mut ChaCha8Rng, n: usize, p: f64, mut f: impl FnMut(usize, usize)) {
    if n < 2 || p <= 0.0 {
        return;
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let log_q = (1.0 - p).ln();
    let mut k: u64 = 0;
    let (mut row, mut row_start) = (0usize, 0u64);
    loop {
        if p < 1.0 {
            let u: f64 = rng.random::<f64>();
            let skip = ((1.0 - u).ln() / log_q).floor();
            if !skip.is_finite() || skip >= (total - k) as f64 {
                return;
            }
            k += skip as u64;
        }
        if k >= total {
            return;
        }
        // row r holds pairs (r, r+1..n), n - 1 - r of them
        while k >= row_start + (n - 1 - row) as u64 {
            row_start += (n - 1 - row) as u64;
            row += 1;
        }
        let j = row + 1 + (k - row_start) as usize;
        f(row, j);
        k += 1;
    }
}

fn noisy(rng: &mut ChaCha8Rng, centroid: &[f64], signal: f64, noise: &Normal<f64>) -> Vec<f32> {
    centroid
        .iter()
        .map(|&m| (signal * m + noise.sample(rng)) as f32)
        .collect()
}

/// Builds one labeled marketplace snapshot.
pub fn generate_synthetic_graph(cfg: &GeneratorConfig) -> Result<HeteroGraph> {
    cfg.validate()?;
    let world = World::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise).unwrap();
    let mut g = HeteroGraph::new(cfg.schema());

    let seller_blocks = blocks(cfg.sellers, cfg.communities);
    let product_blocks = blocks(cfg.products, cfg.communities);
    let community_of = |blocks: &[usize], i: usize| blocks.partition_point(|&b| b <= i) - 1;

    for s in 0..cfg.sellers {
        let c = community_of(&seller_blocks, s);
        let f = noisy(
            &mut rng,
            world.seller_centroid(c),
            cfg.seller_signal,
            &noise,
        );
        g.add_node(NodeType::Seller, &f)?;
    }
    for p in 0..cfg.products {
        let c = community_of(&product_blocks, p);
        let category = if rng.random_bool(0.8) {
            world.category(c)
        } else {
            rng.random_range(0..cfg.product_categories)
        };
        let mut f = vec![category as f32];
        f.extend(noisy(
            &mut rng,
            world.product_centroid(c),
            cfg.product_signal,
            &noise,
        ));
        g.add_node(NodeType::Product, &f)?;
    }

    for (r, prob) in cfg.relations.iter().enumerate() {
        let rel = RelationTag::seller_seller(r)?;
        let mut pairs = Vec::new();
        for c in 0..cfg.communities {
            let (lo, hi) = (seller_blocks[c], seller_blocks[c + 1]);
            sample_pairs(&mut rng, hi - lo, prob.intra, |i, j| {
                pairs.push((lo + i, lo + j))
            });
        }
        sample_pairs(&mut rng, cfg.sellers, prob.inter, |i, j| {
            if community_of(&seller_blocks, i) != community_of(&seller_blocks, j) {
                pairs.push((i, j));
            }
        });
        for (i, j) in pairs {
            g.add_edge(rel, NodeRef::seller(i), NodeRef::seller(j), None)?;
        }
    }

    let extra = Poisson::new(cfg.offers_per_seller - 1.0).ok();
    for s in 0..cfg.sellers {
        let c = community_of(&seller_blocks, s);
        let want = 1 + extra.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
        let want = want.min(cfg.products);
        let (lo, hi) = (product_blocks[c], product_blocks[c + 1]);
        let mut chosen: Vec<usize> = Vec::with_capacity(want);
        let mut attempts = 0;
        while chosen.len() < want && attempts < 50 * want {
            attempts += 1;
            let p = if hi > lo && rng.random_bool(cfg.product_affinity) {
                rng.random_range(lo..hi)
            } else {
                rng.random_range(0..cfg.products)
            };
            if !chosen.contains(&p) {
                chosen.push(p);
            }
        }
        if chosen.len() < want {
            for i in sample(&mut rng, cfg.products, want).into_iter() {
                if chosen.len() == want {
                    break;
                }
                if !chosen.contains(&i) {
                    chosen.push(i);
                }
            }
        }
        let profile = cfg.profile(c);
        let habit = draw_class(&mut rng, profile);
        for p in chosen {
            let class = if rng.random_bool(cfg.seller_persistence) {
                habit
            } else {
                draw_class(&mut rng, profile)
            };
            let price =
                (world.price_shift[class] * cfg.price_signal + 0.5 * noise.sample(&mut rng)).exp();
            let mut f = vec![price as f32];
            f.extend(noisy(
                &mut rng,
                &world.class_centroids[class],
                cfg.offer_signal,
                &noise,
            ));
            let o = g.add_offer(s, p, &f)?;
            let mut label = [0u8; NUM_CLASSES];
            label[class] = 1;
            g.set_label(o, label)?;
        }
    }
    Ok(g)
}

fn draw_class(rng: &mut ChaCha8Rng, profile: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in profile.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    NORMAL_CLASS
}

/// Community index of each seller under `cfg`'s contiguous block layout.
pub fn seller_communities(cfg: &GeneratorConfig) -> Vec<usize> {
    let b = blocks(cfg.sellers, cfg.communities);
    (0..cfg.sellers)
        .map(|s| b.partition_point(|&x| x <= s) - 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            sellers: 100,
            products: 200,
            communities: 4,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn exact_node_counts_and_determinism() {
        let cfg = small();
        let g = generate_synthetic_graph(&cfg).unwrap();
        assert_eq!(g.num_sellers(), 100);
        assert_eq!(g.num_products(), 200);
        assert!(g.num_offers() >= 100);
        let h = generate_synthetic_graph(&cfg).unwrap();
        assert_eq!(g.edges(), h.edges());
        assert_eq!(g.offer_features(), h.offer_features());
        crate::graph::validate(&g).unwrap();
    }

    #[test]
    fn pair_sampler_full_and_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut all = Vec::new();
        sample_pairs(&mut rng, 5, 1.0, |i, j| all.push((i, j)));
        assert_eq!(all.len(), 10);
        assert!(all.iter().all(|&(i, j)| i < j && j < 5));
        let mut none = 0;
        sample_pairs(&mut rng, 50, 0.0, |_, _| none += 1);
        assert_eq!(none, 0);
    }

    #[test]
    fn disjoint_profiles_give_pure_communities() {
        let only = |k: usize| {
            let mut p = vec![0.0; NUM_CLASSES - 1];
            p[k] = 1.0;
            p
        };
        let cfg = GeneratorConfig {
            sellers: 60,
            products: 60,
            communities: 2,
            noise: 0.0,
            class_profiles: vec![only(0), only(3)],
            ..GeneratorConfig::default()
        };
        let g = generate_synthetic_graph(&cfg).unwrap();
        let comm = seller_communities(&cfg);
        for (o, &(s, _)) in g.offer_ends().iter().enumerate() {
            let class = g.label(o).unwrap().iter().position(|&v| v == 1).unwrap();
            assert_eq!(class, if comm[s as usize] == 0 { 0 } else { 3 });
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let mut cfg = small();
        cfg.products = 0;
        assert!(generate_synthetic_graph(&cfg).is_err());
        let mut cfg = small();
        cfg.relations[0].intra = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.class_profiles = vec![vec![0.6; 8]];
        assert!(cfg.validate().is_err());
    }
}
