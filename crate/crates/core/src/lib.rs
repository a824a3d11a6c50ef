//! A graph coordinate system engine.
//!
//! Large graphs are embedded into a hyperbolic (hyperboloid-model)
//! coordinate space so node-distance queries and approximate shortest-path
//! queries run in near-constant time. The crate provides the embedding
//! pipeline, an exact BFS oracle for validation, distortion metrics and the
//! distance-driven analytics built on top: separation metrics, centrality
//! and distance-ranked social search.

pub mod analytics;
pub mod embed;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod paths;
pub mod query;
pub mod simplex;
pub mod synth;

pub use embed::{
    bootstrap_landmarks, cascade_levels, embed_graph, embed_node, load_embedding, save_embedding,
    CascadeLevels, EmbedConfig, EmbedStats, Embedding, NodeRef, ObjectiveKind,
};
pub use error::{Error, Result};
pub use geometry::{Model, Space};
pub use graph::{
    bfs_distances, load_edge_list, sample_nodes, shortest_path, DistanceVector, Graph, LoadStats,
    NodeId, UNREACHABLE,
};
pub use paths::{find_path, PathConfig, PathResult};
pub use query::{
    estimate_distance, estimate_distance_hybrid, fit_likelihood_model, load_model, mle_estimate,
    save_model, LikelihoodModel, QueryConfig,
};
pub use simplex::{minimize, OptimizeResult, OptimizerConfig};
