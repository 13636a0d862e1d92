//! Subgroup models, ideological distance and the gravity-well pull force.

mod embedding;
mod force;

pub use embedding::{CachedEmbedder, Embedder, EmbeddingVector, MockEmbedder, RemoteEmbedder, MOCK_DIM};
pub use force::{
    ideological_distance, pull_force, simulate_exit_order, subgroup_centroid, subgroup_mass, user_embedding,
    ExitDirection, PullForce, SubgroupModel, DEFAULT_TOP_K, DISTANCE_FLOOR,
};
