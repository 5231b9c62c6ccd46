//! ColdGuess and the comparison models.
//!
//! * [`coldguess`]: RGCN node embedder over the consolidated graph, an edge
//!   embedder fed with sibling-offer summaries, and a sigmoid classifier.
//! * [`tabular`]: MLP on raw `seller ‖ product ‖ offer` features, plus the
//!   naive variant that fills new sellers from their seller neighbors.
//! * [`sign`]: the tabular MLP over precomputed neighbor averages.
//! * [`expanded`]: a deeper RGCN on the offers-as-nodes graph.
//!
//! [`Model`] wraps any of them behind one train/score interface.

pub mod checkpoint;
pub mod coldguess;
pub mod expanded;
mod model;
mod params;
pub mod rgcn;
pub mod sign;
pub mod tabular;

pub use checkpoint::{config_hash, load_checkpoint, load_checkpoint_for, save_checkpoint};
pub use coldguess::{
    classifier_forward, coldguess_forward, edge_embedder_forward, node_embedder_forward,
    offer_inputs, summarize_neighbor_offers, ColdGuessArch,
};
pub use expanded::{expanded_ego, expanded_rgcn_forward, ExpandedArch};
pub use model::{
    class_summed_bce, label_targets, Architecture, EpochEvent, Model, ModelKind, TrainConfig,
    TrainMode, TrainReport,
};
pub use params::{glorot, Bound, Params};
pub use rgcn::{project_ego, rgcn_layer, rgcn_stack};
pub use sign::{sign_precompute, sign_table, SignArch};
pub use tabular::{listing_table, mlp_forward, naive_fill_seller_features, TabularArch};
