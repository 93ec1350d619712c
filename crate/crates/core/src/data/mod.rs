//! Datasets with observed (possibly corrupted) labels and hidden ground truth.

mod blobs;
mod implicit;
mod movielens;
mod sampling;
mod split;

pub use blobs::{gen_multiclass_blobs, BlobSpec, MultiClassDataset, MultiClassSplit};
pub use implicit::{gen_planted_implicit, ImplicitDataset, Interaction, PlantedSpec};
pub use movielens::{load_movielens_100k, parse_movielens};
pub use sampling::{sample_negatives, NegativeSampler, NegativeStrategy};
pub use split::{split, CleanRule, SplitMode, SplitSpec, SplitStatus, Splits};
