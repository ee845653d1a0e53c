//! Mining of multiplicative feature combinations in continuous data that are
//! significantly associated with a binary class label.
//!
//! Continuous features are mapped to normalized ranks; the occurrence
//! probability of a combination is estimated by its copula support (the mean
//! over samples of the product of ranks). Each combination is assessed with a
//! G-test on the induced 2x2 contingency table, and the family-wise error rate
//! is controlled with Tarone's testability correction. A closed-form upper bound
//! on the KL divergence gives the minimum attainable p-value of a combination
//! from its support alone, which lets the depth-first search prune every
//! superset that can never become significant.

pub mod baseline;
pub mod cli;
pub mod data;
mod error;
pub mod eval;
pub mod miner;
pub mod ranking;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

pub use baseline::{median_binarize, mine_binary, BinaryDataset, Side};
pub use data::{canonicalize_labels, class_ratios, load_dataset, ClassRatios, Dataset};
pub use miner::{mine, mine_columns, MinerOptions, MiningResult, SignificantCombination};
pub use ranking::{rank_matrix, Combination, RankMatrix};
