//! Ranking and classification metrics, cross-model disagreement, and the
//! rating-bucket study of the real-positive probability.

mod classify;
mod disagreement;
mod ranking;
mod rating;

pub use classify::{accuracy, argmax, binary_accuracy};
pub use disagreement::{disagreement_binary, disagreement_multiclass, DisagreementReport, InstanceRecord};
pub use ranking::{recall_ndcg, RankingMetrics};
pub use rating::{rating_bucket_probability, spearman, BucketStat, RatingStudy};
