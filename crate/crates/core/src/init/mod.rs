//! Initial estimators: Gaussian EM for incomplete subsamples, uniform and
//! cluster-based subsampling, and the EMVE built on them.

mod cluster;
mod em;
mod emve;
mod subsamples;
mod ward;

pub use cluster::{clean_cluster, cluster_projection, euclidean_dissimilarity, ClusterProjection};
pub use em::{gaussian_em, observed_log_likelihood, EmFit};
pub use emve::{emve, EmveResult, SubsamplingMode, SubsamplingPlan, CONCENTRATION_STEPS, SUBSAMPLE_EM_ITERATIONS};
pub use subsamples::required_subsamples;
pub use ward::{ward_hclust, Dendrogram, Merge};
