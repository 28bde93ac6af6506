//! Laboratory toolkit for visually grounded reasoning in VQA.
//!
//! The crate covers the whole loop of a desk-scale study:
//!
//! - [`data`]: scenes, questions, ontology, splits and their JSONL persistence.
//! - [`features`]: symbolic per-object feature vectors, detector noise and Infusion.
//! - [`corpus`]: the synthetic corpus generator and OOD split constructors,
//!   including the feature-edited augmentation split.
//! - [`models`]: an answer-prior baseline, a softmax-linear classifier and a
//!   rule-based program executor.
//! - [`fpvg`]: the four-category grounding metric and accuracy scoring.
//! - [`vgr`]: the propositional layer (hypotheses, proposition, corollaries)
//!   and the published-result fixtures.
//! - [`experiment`]: the DET-vs-INF comparison pipeline.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the command-line tools use.

pub mod corpus;
pub mod data;
pub mod error;
pub mod experiment;
pub mod features;
pub mod fpvg;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod vgr;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EmbeddingTable = features::EmbeddingTable<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type ImageFeatures = features::ImageFeatures<f64>;
pub type AugSample = corpus::AugSample<f64>;
pub type LinearModel = models::LinearModel<f64>;
pub type RuleModel = models::RuleModel<f64>;
pub type GroundingReport = fpvg::GroundingReport<f64>;
pub type Rates = fpvg::Rates<f64>;
pub type CorollaryFinding = vgr::CorollaryFinding<f64>;

pub type ImageFeaturesF32 = features::ImageFeatures<f32>;
pub type LinearModelF32 = models::LinearModel<f32>;
