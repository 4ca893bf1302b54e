//! Structure and parameter learning for binary pairwise Markov networks
//! under a fixed edge budget.
//!
//! The learner starts from a Chow-Liu tree padded with random edges and
//! repeatedly exchanges `k` edges: parameters are fitted by penalized
//! maximum pseudo-likelihood with automatic parameter tying, the weakest
//! edges are removed (greedily or by rejection sampling), and the inactive
//! edges with the largest pseudo-likelihood gain take their place.

pub mod chowliu;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod model;
pub mod optim;
pub mod param_learn;
pub mod structure;

pub use chowliu::{chow_liu_tree, mutual_information};
pub use dataset::{load_dataset, DataSet, PairCounts};
pub use error::{Error, Result};
pub use model::{Edge, PairwiseModel};
pub use param_learn::{
    learn_params_with_apt, mple_fit, quantize_params, tied_fit, FitOptions, TyingPartition,
};
pub use structure::{
    edge_deletion_scores, forced_pruning, greedy_add, greedy_delete, rejection_sample_delete,
    ForcedPruning, Heuristic, PruningConfig, PruningOutcome,
};
