//! Per-scan inference: partition the raw measurements with a collapsed Gibbs
//! sampler, pick the target cluster, and score the split with a likelihood ratio.

mod classify;
mod gibbs;
mod marginal;

pub use classify::{classify_clusters, likelihood_ratio, ScanPartitionResult};
pub use gibbs::{gibbs_partition, gibbs_partition_with, GibbsConfig, GibbsSampler, ScanModel};
pub use marginal::{log_marginal, ClusterStats, NoiseModel};
