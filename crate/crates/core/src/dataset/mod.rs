//! Training-sample construction from raw repositories: dependency
//! clustering, dependency-first ordering and target-span selection.

mod graph;
mod sample;

pub use graph::{build_file_dependency_graph, cluster_files, topo_sort_cluster, FileDependencyGraph, RepoCluster};
pub use sample::{
    admissible_starts, build_training_samples, sample_target, TrainingSample, EDGE_MARGIN, MAX_TARGET_TOKENS,
    MIN_TARGET_TOKENS,
};
