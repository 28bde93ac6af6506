//! Run configuration, read from TOML or JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vgr_core::corpus::{AugParams, CpParams, FreqParams, GenParams};
use vgr_core::experiment::{EmbeddingParams, ExperimentParams, HoldoutParams};
use vgr_core::features::DetNoiseParams;
use vgr_core::models::{LinearHyper, DEFAULT_TAU};
use vgr_core::vgr::CorollaryTolerance;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    SceneHoldout,
    ChangingPriors,
    Frequency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub method: SplitMethod,
    pub holdout: HoldoutParams,
    pub changing_priors: CpParams,
    pub frequency: FreqParams,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            method: SplitMethod::SceneHoldout,
            holdout: HoldoutParams::default(),
            changing_priors: CpParams::default(),
            frequency: FreqParams::default(),
        }
    }
}

/// Which image representation a stage sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// Ground-truth scene graph.
    Gt,
    /// Simulated detector output.
    Det,
    /// Detector output with question-relevant objects corrected.
    Inf,
}

impl FeatureSource {
    pub fn label(self) -> &'static str {
        match self {
            FeatureSource::Gt => "GT",
            FeatureSource::Det => "DET",
            FeatureSource::Inf => "INF",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Prior,
    Linear,
    Rule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub max_variants: usize,
    /// Features that get edited: `det` or `gt`.
    pub base_features: FeatureSource,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            max_variants: AugParams::default().max_variants,
            base_features: FeatureSource::Det,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub train_features: FeatureSource,
    pub linear: LinearHyper,
    pub tau: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Linear,
            train_features: FeatureSource::Det,
            linear: ExperimentParams::default().linear,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EvalPart {
    Dev,
    IdTest,
    OodTest,
    AugId,
    AugOod,
}

impl EvalPart {
    pub fn label(self) -> &'static str {
        match self {
            EvalPart::Dev => "dev",
            EvalPart::IdTest => "ID-test",
            EvalPart::OodTest => "OOD-test",
            EvalPart::AugId => "AUG-ID",
            EvalPart::AugOod => "AUG-OOD",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub part: EvalPart,
    /// Features for non-augmented parts; AUG parts use the augment stage's.
    pub features: FeatureSource,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            part: EvalPart::AugOod,
            features: FeatureSource::Det,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corpus: GenParams,
    pub noise: DetNoiseParams,
    pub embedding: EmbeddingParams,
    pub split: SplitConfig,
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    pub evaluate: EvalConfig,
    pub tolerance: CorollaryTolerance,
}

impl Default for RunConfig {
    fn default() -> Self {
        let experiment = ExperimentParams::default();
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            corpus: experiment.corpus,
            noise: experiment.noise,
            embedding: experiment.embedding,
            split: SplitConfig::default(),
            augment: AugmentConfig::default(),
            model: ModelConfig::default(),
            evaluate: EvalConfig::default(),
            tolerance: experiment.tolerance,
        }
    }
}

impl RunConfig {
    /// Reads `path` as JSON when it ends in `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, is_json)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys present in `text` override the defaults; nested tables are
    /// merged key by key rather than replaced.
    pub fn parse(text: &str, is_json: bool) -> Result<Self, String> {
        let overrides: serde_json::Value = if is_json {
            serde_json::from_str(text).map_err(|e| e.to_string())?
        } else {
            toml::from_str(text).map_err(|e| e.to_string())?
        };
        let mut merged = serde_json::to_value(RunConfig::default()).map_err(|e| e.to_string())?;
        merge(&mut merged, overrides);
        serde_json::from_value(merged).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let check = |r: vgr_core::Result<()>| r.map_err(CliError::from);
        check(self.corpus.validate())?;
        check(self.noise.validate())?;
        check(self.model.linear.validate())?;
        check(self.tolerance.validate())?;
        if self.embedding.dim == 0 {
            return Err(CliError::Config("embedding.dim must be positive".into()));
        }
        if self.augment.base_features == FeatureSource::Inf {
            return Err(CliError::Config(
                "augment.base_features must be `det` or `gt`".into(),
            ));
        }
        if self.evaluate.features == FeatureSource::Inf {
            return Err(CliError::Config(
                "evaluate.features must be `det` or `gt`".into(),
            ));
        }
        Ok(())
    }

    /// Parameters of the end-to-end reproduction run.
    pub fn experiment(&self) -> ExperimentParams {
        ExperimentParams {
            seed: self.seed,
            corpus: self.corpus.clone(),
            noise: self.noise,
            split: self.split.holdout,
            augment: AugParams {
                max_variants: self.augment.max_variants,
                seed: 0,
            },
            linear: self.model.linear.clone(),
            embedding: self.embedding,
            tau: self.model.tau,
            tolerance: self.tolerance,
        }
    }
}

fn merge(base: &mut serde_json::Value, overrides: serde_json::Value) {
    match (base, overrides) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (key, value) in o {
                match b.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}
