//! Edge-classification graph learning for cold-start risk detection on
//! seller–product graphs.
//!
//! Offer listings are feature-bearing edges between seller and product nodes
//! ("consolidated nodes"). A relational GCN embeds both endpoints, an MLP
//! embeds the offer together with the mean features of sibling offers that
//! share its seller or product ("homogeneous influence"), and a classifier
//! scores nine listing classes.
//!
//! ```text
//! graph      typed nodes, nine relations, feature/label storage, bundle IO
//! sampling   labeled-offer batches and multi-hop ego networks
//! tensor     dense tensors, reverse-mode tape, Adam
//! models     ColdGuess plus naive, tabular, SIGN and expanded-RGCN baselines
//! coldstart  planted-community generator and cold-start masking scenarios
//! eval       ROC-AUC, per-class reports, scaling benchmark
//! experiment config, commands and the reproduction pipeline behind the CLI
//! ```
//!
//! Runnable walkthroughs live in `examples/`.

pub mod coldstart;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod models;
pub mod sampling;
pub mod tensor;

mod error;

pub use error::{Error, Result};

/// Number of listing classes: eight defect types plus Normal.
pub const NUM_CLASSES: usize = 9;
