//! Symbolic object features: word embeddings for name and attributes plus the
//! bounding box, detector-noise simulation, Infusion and FPVG modulation.

mod detection;
mod embedding;
mod vector;

pub use detection::{simulate_detection, DetNoiseParams};
pub(crate) use embedding::normalized;
pub use embedding::{hash_embedding, EmbeddingTable, DEFAULT_DIM};
pub use vector::{
    apply_name_edit, infuse, modulate, object_features, symbolic_features, FeatureVector,
    ImageFeatures,
};
