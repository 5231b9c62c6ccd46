use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::coldguess::{coldguess_forward, offer_inputs, ColdGuessArch};
use super::expanded::{expanded_ego, expanded_rgcn_forward, ExpandedArch};
use super::params::{Bound, Params};
use super::sign::{sign_table, SignArch};
use super::tabular::{
    listing_table, listing_table_with, mlp_forward, naive_fill_seller_features, TabularArch,
};
use crate::graph::{build_expanded_graph, ExpandedGraph, FeatureMatrix, HeteroGraph};
use crate::sampling::{epoch_batches, global_ends, offer_ego, EgoNetwork};
use crate::tensor::{AdamConfig, Optimizer, OptimizerKind, Real, Tape, Tensor, Var};
use crate::{Error, Result, NUM_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Coldguess,
    Naive,
    Sign,
    RgcnExpanded,
    Tabular,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Coldguess,
        ModelKind::Naive,
        ModelKind::Sign,
        ModelKind::RgcnExpanded,
        ModelKind::Tabular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Coldguess => "coldguess",
            Self::Naive => "naive",
            Self::Sign => "sign",
            Self::RgcnExpanded => "rgcn_expanded",
            Self::Tabular => "tabular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// How the nine outputs are learned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Nine independent single-output networks.
    NineBinary,
    /// One network, loss summed over the nine classes.
    #[default]
    MultiTask,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Coldguess(ColdGuessArch),
    Naive(TabularArch),
    Sign(SignArch),
    RgcnExpanded(ExpandedArch),
    Tabular(TabularArch),
}

impl Architecture {
    pub fn for_graph(kind: ModelKind, g: &HeteroGraph, sign_hops: usize) -> Self {
        match kind {
            ModelKind::Coldguess => Self::Coldguess(ColdGuessArch::for_graph(g)),
            ModelKind::Naive => Self::Naive(TabularArch::for_graph(g)),
            ModelKind::Sign => Self::Sign(SignArch::for_graph(g, sign_hops)),
            ModelKind::RgcnExpanded => Self::RgcnExpanded(ExpandedArch::for_graph(g)),
            ModelKind::Tabular => Self::Tabular(TabularArch::for_graph(g)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Coldguess(_) => ModelKind::Coldguess,
            Self::Naive(_) => ModelKind::Naive,
            Self::Sign(_) => ModelKind::Sign,
            Self::RgcnExpanded(_) => ModelKind::RgcnExpanded,
            Self::Tabular(_) => ModelKind::Tabular,
        }
    }

    fn init(&self, outputs: usize, rng: &mut ChaCha8Rng) -> Params {
        match self {
            Self::Coldguess(a) => a.init(outputs, rng),
            Self::Naive(a) | Self::Tabular(a) => a.init(outputs, rng),
            Self::Sign(a) => a.init(outputs, rng),
            Self::RgcnExpanded(a) => a.init(outputs, rng),
        }
    }

    /// Name prefix of the last affine layer.
    fn output_layer(&self) -> &'static str {
        match self {
            Self::Coldguess(_) => "clf2",
            Self::Naive(_) | Self::Tabular(_) | Self::Sign(_) => "fc2",
            Self::RgcnExpanded(_) => "head2",
        }
    }

    fn check_graph(&self, g: &HeteroGraph) -> Result<()> {
        match self {
            Self::Coldguess(a) => a.check_graph(g),
            Self::Naive(a) | Self::Tabular(a) => a.check_graph(g),
            Self::Sign(a) => a.check_graph(g),
            Self::RgcnExpanded(a) => a.check_graph(g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Keep at most this many neighbors per node and relation in ego networks.
    pub fanout_cap: Option<usize>,
    pub sign_hops: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            mode: TrainMode::default(),
            epochs: 20,
            batch_size: 1024,
            optimizer: OptimizerKind::Adam,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            seed: 7,
            fanout_cap: None,
            sign_hops: 3,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// Reported once per head and epoch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochEvent {
    pub model: ModelKind,
    pub head: Option<usize>,
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean training loss per epoch for each head.
    pub head_curves: Vec<Vec<f64>>,
}

impl TrainReport {
    /// Per-epoch loss summed over heads; comparable across modes.
    pub fn loss_curve(&self) -> Vec<f64> {
        let epochs = self.head_curves.first().map_or(0, Vec::len);
        (0..epochs)
            .map(|e| self.head_curves.iter().map(|c| c[e]).sum())
            .collect()
    }
}

/// Per-graph inputs shared by every head.
enum Prepared {
    Coldguess { edge_in: FeatureMatrix },
    Table(FeatureMatrix),
    Expanded(Box<ExpandedGraph>),
}

/// A trained or freshly initialized model of any kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    arch: Architecture,
    mode: TrainMode,
    heads: Vec<Params>,
}

impl Model {
    /// Glorot-initialized model. In nine-binary mode head `c` is column `c`
    /// of the nine-output initialization, so both modes start identically.
    pub fn new(arch: Architecture, mode: TrainMode, seed: u64) -> Self {
        let full = arch.init(NUM_CLASSES, &mut ChaCha8Rng::seed_from_u64(seed));
        let heads = match mode {
            TrainMode::MultiTask => vec![full],
            TrainMode::NineBinary => {
                let out = arch.output_layer();
                (0..NUM_CLASSES)
                    .map(|c| slice_output(&full, out, c))
                    .collect()
            }
        };
        Self { arch, mode, heads }
    }

    pub fn for_graph(kind: ModelKind, g: &HeteroGraph, mode: TrainMode, seed: u64) -> Self {
        Self::new(Architecture::for_graph(kind, g, 3), mode, seed)
    }

    pub(crate) fn from_heads(arch: Architecture, mode: TrainMode, heads: Vec<Params>) -> Self {
        Self { arch, mode, heads }
    }

    pub fn kind(&self) -> ModelKind {
        self.arch.kind()
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn mode(&self) -> TrainMode {
        self.mode
    }

    pub fn heads(&self) -> &[Params] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [Params] {
        &mut self.heads
    }

    fn prepare(&self, g: &HeteroGraph, new_sellers: &[usize]) -> Prepared {
        match &self.arch {
            Architecture::Coldguess(_) => Prepared::Coldguess {
                edge_in: offer_inputs(g),
            },
            Architecture::Tabular(_) => Prepared::Table(listing_table(g)),
            Architecture::Naive(_) => Prepared::Table(listing_table_with(
                g,
                &naive_fill_seller_features(g, new_sellers),
            )),
            Architecture::Sign(a) => Prepared::Table(sign_table(g, a.hops)),
            Architecture::RgcnExpanded(_) => Prepared::Expanded(Box::new(build_expanded_graph(g))),
        }
    }

    /// Scores for `offers`. With `ego` unset the whole graph is propagated.
    #[allow(clippy::too_many_arguments)]
    fn forward<T: Real>(
        &self,
        tape: &mut Tape<T>,
        p: &Bound,
        g: &HeteroGraph,
        prep: &Prepared,
        offers: &[usize],
        sampled: bool,
        fanout_cap: Option<usize>,
    ) -> Result<Var> {
        match (&self.arch, prep) {
            (Architecture::Coldguess(a), Prepared::Coldguess { edge_in }) => {
                let ego = if sampled {
                    offer_ego(g, offers, a.layers, fanout_cap)
                } else {
                    EgoNetwork::whole(g.topology()).with_endpoints(&global_ends(g, offers))
                };
                let x = edge_in.gather::<T>(offers.iter().copied());
                coldguess_forward(tape, p, a, g, &ego, x)
            }
            (Architecture::RgcnExpanded(a), Prepared::Expanded(eg)) => {
                let ego = if sampled {
                    expanded_ego(eg, offers, a.layers, fanout_cap)
                } else {
                    EgoNetwork::whole(eg.topology())
                };
                expanded_rgcn_forward(tape, p, a, eg, &ego, offers)
            }
            (_, Prepared::Table(t)) => {
                let x = tape.constant(t.gather::<T>(offers.iter().copied()));
                mlp_forward(tape, p, x)
            }
            _ => unreachable!("prepared inputs match the architecture"),
        }
    }

    /// `offers x 9` probabilities.
    pub fn score(&self, g: &HeteroGraph, offers: &[usize]) -> Result<Tensor<f32>> {
        self.score_with(g, offers, &[])
    }

    /// Like [`Model::score`]; `new_sellers` marks sellers whose features are
    /// missing, which only the naive baseline uses.
    pub fn score_with(
        &self,
        g: &HeteroGraph,
        offers: &[usize],
        new_sellers: &[usize],
    ) -> Result<Tensor<f32>> {
        self.arch.check_graph(g)?;
        if let Some(&o) = offers.iter().find(|&&o| o >= g.num_offers()) {
            return Err(Error::Graph(format!("offer {o} out of range")));
        }
        let prep = self.prepare(g, new_sellers);
        let mut out = Tensor::zeros(offers.len(), NUM_CLASSES);
        if offers.is_empty() {
            return Ok(out);
        }
        for (h, params) in self.heads.iter().enumerate() {
            let mut tape = Tape::<f32>::new();
            let bound = params.bind_frozen(&mut tape);
            let probs = self.forward(&mut tape, &bound, g, &prep, offers, false, None)?;
            let v = tape.value(probs);
            for r in 0..offers.len() {
                match self.mode {
                    TrainMode::MultiTask => out.row_slice_mut(r).copy_from_slice(v.row_slice(r)),
                    TrainMode::NineBinary => out.set(r, h, v.get(r, 0)),
                }
            }
        }
        Ok(out)
    }

    /// Scores for offers sampled as one mini-batch through their ego network.
    pub fn score_batch(&self, g: &HeteroGraph, offers: &[usize]) -> Result<Tensor<f32>> {
        self.arch.check_graph(g)?;
        let prep = self.prepare(g, &[]);
        let mut out = Tensor::zeros(offers.len(), NUM_CLASSES);
        for (h, params) in self.heads.iter().enumerate() {
            let mut tape = Tape::<f32>::new();
            let bound = params.bind_frozen(&mut tape);
            let probs = self.forward(&mut tape, &bound, g, &prep, offers, true, None)?;
            let v = tape.value(probs);
            for r in 0..offers.len() {
                match self.mode {
                    TrainMode::MultiTask => out.row_slice_mut(r).copy_from_slice(v.row_slice(r)),
                    TrainMode::NineBinary => out.set(r, h, v.get(r, 0)),
                }
            }
        }
        Ok(out)
    }

    /// Mini-batch training over every labeled offer of `g` per epoch.
    pub fn train(
        &mut self,
        g: &HeteroGraph,
        cfg: &TrainConfig,
        on_epoch: &mut dyn FnMut(&EpochEvent),
    ) -> Result<TrainReport> {
        self.arch.check_graph(g)?;
        if cfg.mode != self.mode {
            return Err(Error::Config(format!(
                "model was built for {:?} but training asks for {:?}",
                self.mode, cfg.mode
            )));
        }
        let labeled = g.labeled_offers();
        if labeled.is_empty() {
            return Err(Error::Graph("graph has no labeled offers".into()));
        }
        if cfg.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let prep = self.prepare(g, &[]);
        let kind = self.kind();
        let mode = self.mode;
        let mut report = TrainReport::default();
        let mut heads = std::mem::take(&mut self.heads);
        for (h, params) in heads.iter_mut().enumerate() {
            let head = match mode {
                TrainMode::MultiTask => None,
                TrainMode::NineBinary => Some(h),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut opt = Optimizer::new(cfg.optimizer, cfg.adam(), params.tensors());
            let mut curve = Vec::with_capacity(cfg.epochs);
            for epoch in 0..cfg.epochs {
                let started = Instant::now();
                let mut total = 0.0;
                for (bi, batch) in epoch_batches(&labeled, cfg.batch_size, &mut rng)
                    .iter()
                    .enumerate()
                {
                    let targets = Arc::new(label_targets(g, batch, head));
                    let mut tape = Tape::<f32>::new();
                    let bound = params.bind(&mut tape);
                    let probs =
                        self.forward(&mut tape, &bound, g, &prep, batch, true, cfg.fanout_cap)?;
                    let loss = class_summed_bce(&mut tape, probs, targets)?;
                    let value = tape.value(loss).get(0, 0) as f64;
                    if !value.is_finite() {
                        self.heads = heads;
                        return Err(Error::Diverged {
                            epoch,
                            batch: bi,
                            loss: value,
                        });
                    }
                    let grads = tape.backward(loss)?;
                    let gs: Vec<Tensor<f32>> = bound
                        .vars()
                        .iter()
                        .zip(params.tensors())
                        .map(|(&v, t)| grads.get_or_zeros(v, t.shape()))
                        .collect();
                    opt.step(params.tensors_mut(), &gs)?;
                    total += value * batch.len() as f64;
                }
                let loss = total / labeled.len() as f64;
                curve.push(loss);
                on_epoch(&EpochEvent {
                    model: kind,
                    head,
                    epoch,
                    loss,
                    seconds: started.elapsed().as_secs_f64(),
                });
            }
            report.head_curves.push(curve);
        }
        self.heads = heads;
        Ok(report)
    }

    /// Training loss of each head on the given offers, without updating.
    pub fn head_losses(&self, g: &HeteroGraph, offers: &[usize]) -> Result<Vec<f64>> {
        let prep = self.prepare(g, &[]);
        let mut out = Vec::new();
        for (h, params) in self.heads.iter().enumerate() {
            let head = (self.mode == TrainMode::NineBinary).then_some(h);
            let mut tape = Tape::<f32>::new();
            let bound = params.bind_frozen(&mut tape);
            let probs = self.forward(&mut tape, &bound, g, &prep, offers, true, None)?;
            let loss =
                class_summed_bce(&mut tape, probs, Arc::new(label_targets(g, offers, head)))?;
            out.push(tape.value(loss).get(0, 0) as f64);
        }
        Ok(out)
    }
}

/// Mean cross-entropy per class, summed over the target columns.
pub fn class_summed_bce<T: Real>(
    tape: &mut Tape<T>,
    probs: Var,
    targets: Arc<Tensor<T>>,
) -> Result<Var> {
    let classes = targets.cols();
    let mean = tape.bce_loss(probs, targets)?;
    tape.scale(mean, T::from_usize(classes).unwrap())
}

/// 0/1 targets for `offers`: all nine classes, or one column for a head.
pub fn label_targets<T: Real>(g: &HeteroGraph, offers: &[usize], head: Option<usize>) -> Tensor<T> {
    let cols = if head.is_some() { 1 } else { NUM_CLASSES };
    let mut t = Tensor::zeros(offers.len(), cols);
    for (r, &o) in offers.iter().enumerate() {
        let l = g.label(o).expect("training offers are labeled");
        match head {
            Some(c) => t.set(r, 0, T::of(l[c] as f32)),
            None => {
                for (c, &v) in l.iter().enumerate() {
                    t.set(r, c, T::of(v as f32));
                }
            }
        }
    }
    t
}

fn slice_output(full: &Params, layer: &str, c: usize) -> Params {
    let wname = format!("{layer}.w");
    let bname = format!("{layer}.b");
    let entries = full
        .iter()
        .map(|(name, t)| {
            let t = if name == wname {
                let col: Vec<f32> = (0..t.rows()).map(|r| t.get(r, c)).collect();
                Tensor::from_vec(t.rows(), 1, col).unwrap()
            } else if name == bname {
                Tensor::row(&[t.get(0, c)])
            } else {
                t.clone()
            };
            (name.to_string(), t)
        })
        .collect();
    Params::from_entries(entries)
}
