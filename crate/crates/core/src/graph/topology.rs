use super::{HeteroGraph, RelationTag, NUM_RELATIONS};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Csr {
    fn from_lists(lists: impl Iterator<Item = Vec<u32>>) -> Self {
        let mut csr = Csr {
            offsets: vec![0],
            targets: Vec::new(),
        };
        for l in lists {
            csr.targets.extend_from_slice(&l);
            csr.offsets.push(csr.targets.len() as u32);
        }
        csr
    }

    fn row(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }
}

/// Immutable multi-relational adjacency over one global index space.
///
/// Nodes are laid out in contiguous blocks per node kind (sellers, products,
/// and for expanded graphs offers). Neighbor lists are sorted and symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    kind_starts: Vec<usize>,
    relations: Vec<Csr>,
}

impl Topology {
    /// `kind_sizes` gives the block length of each node kind in order;
    /// `neighbors(v, r)` must return sorted global indices.
    pub fn build(
        kind_sizes: &[usize],
        num_relations: usize,
        mut neighbors: impl FnMut(usize, usize) -> Vec<u32>,
    ) -> Self {
        let mut kind_starts = vec![0];
        for &n in kind_sizes {
            kind_starts.push(kind_starts.last().unwrap() + n);
        }
        let total = *kind_starts.last().unwrap();
        let relations = (0..num_relations)
            .map(|r| Csr::from_lists((0..total).map(|v| neighbors(v, r))))
            .collect();
        Self {
            kind_starts,
            relations,
        }
    }

    pub(super) fn from_graph(g: &HeteroGraph) -> Self {
        let ns = g.num_sellers();
        Self::build(&[ns, g.num_products()], NUM_RELATIONS, |v, r| {
            let node = g.node_at(v);
            g.neighbors(node, RelationTag::from_id(r).unwrap())
                .into_iter()
                .map(|u| g.global_index(u) as u32)
                .collect()
        })
    }

    pub fn num_nodes(&self) -> usize {
        *self.kind_starts.last().unwrap()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_kinds(&self) -> usize {
        self.kind_starts.len() - 1
    }

    /// Start of each kind's block; the last entry is the node count.
    pub fn kind_starts(&self) -> &[usize] {
        &self.kind_starts
    }

    pub fn kind_of(&self, v: usize) -> usize {
        debug_assert!(v < self.num_nodes());
        self.kind_starts[1..]
            .iter()
            .position(|&end| v < end)
            .unwrap()
    }

    /// Position of `v` within its kind's block.
    pub fn local_of(&self, v: usize) -> usize {
        v - self.kind_starts[self.kind_of(v)]
    }

    pub fn neighbors(&self, v: usize, relation: usize) -> &[u32] {
        self.relations[relation].row(v)
    }

    pub fn degree(&self, v: usize, relation: usize) -> usize {
        self.neighbors(v, relation).len()
    }

    /// Total neighbor entries over all relations; each undirected edge counts twice.
    pub fn adjacency_entries(&self) -> usize {
        self.relations.iter().map(|c| c.targets.len()).sum()
    }
}

impl Topology {
    /// Bytes held by offsets and neighbor lists.
    pub fn adjacency_bytes(&self) -> usize {
        self.relations
            .iter()
            .map(|c| (c.offsets.len() + c.targets.len()) * std::mem::size_of::<u32>())
            .sum()
    }
}
