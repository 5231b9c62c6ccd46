//! Mini-batches of labeled offers and the multi-hop ego networks around them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{HeteroGraph, Topology};
use crate::{Error, Result};

/// Default ego depth, matching a three-layer node embedder.
pub const DEFAULT_HOPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfferBatch {
    pub offers: Vec<usize>,
    pub seed: u64,
}

/// Uniform sample of labeled offers without replacement.
pub fn sample_offer_batch(g: &HeteroGraph, batch_size: usize, seed: u64) -> Result<OfferBatch> {
    let labeled = g.labeled_offers();
    if labeled.is_empty() {
        return Err(Error::Graph("graph has no labeled offers".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = batch_size.min(labeled.len());
    let offers = rand::seq::index::sample(&mut rng, labeled.len(), k)
        .into_iter()
        .map(|i| labeled[i])
        .collect();
    Ok(OfferBatch { offers, seed })
}

/// One epoch: every labeled offer exactly once, shuffled, cut into batches.
pub fn epoch_batches(
    labeled: &[usize],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut order = labeled.to_vec();
    order.shuffle(rng);
    order
        .chunks(batch_size.max(1))
        .map(|c| c.to_vec())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
struct LocalCsr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

/// Subgraph within `hops` relation-edges of a set of seed nodes.
///
/// Local indices are ordered by hop distance, then by global index, so the
/// nodes within distance `k` always form the prefix `0..hop_end(k)`.
#[derive(Clone, Debug)]
pub struct EgoNetwork {
    nodes: Vec<u32>,
    hop: Vec<u8>,
    hop_ends: Vec<usize>,
    local_of: Vec<u32>,
    adjacency: Vec<LocalCsr>,
    kind_starts: Vec<usize>,
    /// Local `(seller, product)` per batch offer; empty for node seeds.
    endpoints: Vec<(u32, u32)>,
    whole: bool,
}

const ABSENT: u32 = u32::MAX;

impl EgoNetwork {
    /// Breadth-first closure from `seeds` over every relation.
    /// `fanout_cap` keeps only the first `k` neighbors per relation when set.
    pub fn extract(topo: &Topology, seeds: &[u32], hops: usize, fanout_cap: Option<usize>) -> Self {
        let mut local_of = vec![ABSENT; topo.num_nodes()];
        let mut nodes: Vec<u32> = Vec::new();
        let mut hop = Vec::new();
        let mut level: Vec<u32> = seeds.to_vec();
        level.sort_unstable();
        level.dedup();
        let mut hop_ends = Vec::with_capacity(hops + 1);
        for d in 0..=hops {
            for &v in &level {
                local_of[v as usize] = nodes.len() as u32;
                nodes.push(v);
                hop.push(d as u8);
            }
            hop_ends.push(nodes.len());
            if d == hops {
                break;
            }
            let mut next = Vec::new();
            for &v in &level {
                for r in 0..topo.num_relations() {
                    let ns = topo.neighbors(v as usize, r);
                    let ns = &ns[..fanout_cap.map_or(ns.len(), |k| k.min(ns.len()))];
                    for &u in ns {
                        if local_of[u as usize] == ABSENT {
                            next.push(u);
                        }
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            level = next;
        }
        let adjacency = (0..topo.num_relations())
            .map(|r| {
                let mut csr = LocalCsr {
                    offsets: vec![0],
                    targets: Vec::new(),
                };
                for &v in &nodes {
                    let ns = topo.neighbors(v as usize, r);
                    let ns = &ns[..fanout_cap.map_or(ns.len(), |k| k.min(ns.len()))];
                    csr.targets.extend(
                        ns.iter()
                            .map(|&u| local_of[u as usize])
                            .filter(|&l| l != ABSENT),
                    );
                    csr.offsets.push(csr.targets.len() as u32);
                }
                csr
            })
            .collect();
        Self {
            nodes,
            hop,
            hop_ends,
            local_of,
            adjacency,
            kind_starts: topo.kind_starts().to_vec(),
            endpoints: Vec::new(),
            whole: false,
        }
    }

    /// The entire graph as one "ego network"; every layer computes every row.
    pub fn whole(topo: &Topology) -> Self {
        let n = topo.num_nodes();
        let adjacency = (0..topo.num_relations())
            .map(|r| {
                let mut csr = LocalCsr {
                    offsets: vec![0],
                    targets: Vec::new(),
                };
                for v in 0..n {
                    csr.targets.extend_from_slice(topo.neighbors(v, r));
                    csr.offsets.push(csr.targets.len() as u32);
                }
                csr
            })
            .collect();
        Self {
            nodes: (0..n as u32).collect(),
            hop: vec![0; n],
            hop_ends: vec![n],
            local_of: (0..n as u32).collect(),
            adjacency,
            kind_starts: topo.kind_starts().to_vec(),
            endpoints: Vec::new(),
            whole: true,
        }
    }

    /// Records local seller/product endpoints for offers given in global indices.
    pub fn with_endpoints(mut self, global_ends: &[(u32, u32)]) -> Self {
        self.endpoints = global_ends
            .iter()
            .map(|&(s, p)| (self.local_of[s as usize], self.local_of[p as usize]))
            .collect();
        debug_assert!(self
            .endpoints
            .iter()
            .all(|&(s, p)| s != ABSENT && p != ABSENT));
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_whole_graph(&self) -> bool {
        self.whole
    }

    /// Depth of the closure; unbounded for the whole graph.
    pub fn hops(&self) -> usize {
        if self.whole {
            usize::MAX
        } else {
            self.hop_ends.len() - 1
        }
    }

    /// Global index of each local node.
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn hop_of(&self, local: usize) -> usize {
        self.hop[local] as usize
    }

    /// Number of nodes within `k` hops of the seeds.
    pub fn hop_end(&self, k: usize) -> usize {
        if self.whole {
            self.nodes.len()
        } else {
            self.hop_ends[k.min(self.hop_ends.len() - 1)]
        }
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        match self.local_of.get(global) {
            Some(&l) if l != ABSENT => Some(l as usize),
            _ => None,
        }
    }

    /// Node kind of a local node (0 seller, 1 product, 2 offer node).
    pub fn kind_of(&self, local: usize) -> usize {
        let v = self.nodes[local] as usize;
        self.kind_starts[1..]
            .iter()
            .position(|&end| v < end)
            .unwrap()
    }

    /// Index of a local node within its kind's block of the global graph.
    pub fn index_in_kind(&self, local: usize) -> usize {
        self.nodes[local] as usize - self.kind_starts[self.kind_of(local)]
    }

    pub fn num_relations(&self) -> usize {
        self.adjacency.len()
    }

    /// Included neighbors of a local node under `relation`, as local indices.
    pub fn neighbors(&self, local: usize, relation: usize) -> &[u32] {
        let csr = &self.adjacency[relation];
        &csr.targets[csr.offsets[local] as usize..csr.offsets[local + 1] as usize]
    }

    pub fn endpoints(&self) -> &[(u32, u32)] {
        &self.endpoints
    }
}

/// Ego network around the seller and product endpoints of `batch`.
pub fn extract_ego_network(g: &HeteroGraph, batch: &OfferBatch, hops: usize) -> EgoNetwork {
    offer_ego(g, &batch.offers, hops, None)
}

pub(crate) fn offer_ego(
    g: &HeteroGraph,
    offers: &[usize],
    hops: usize,
    fanout_cap: Option<usize>,
) -> EgoNetwork {
    let ends = global_ends(g, offers);
    let seeds: Vec<u32> = ends.iter().flat_map(|&(s, p)| [s, p]).collect();
    EgoNetwork::extract(g.topology(), &seeds, hops, fanout_cap).with_endpoints(&ends)
}

pub(crate) fn global_ends(g: &HeteroGraph, offers: &[usize]) -> Vec<(u32, u32)> {
    let ns = g.num_sellers() as u32;
    offers
        .iter()
        .map(|&o| {
            let (s, p) = g.offer_ends()[o];
            (s, ns + p)
        })
        .collect()
}
