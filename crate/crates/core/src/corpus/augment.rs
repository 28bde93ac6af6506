use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    eligible_for_fpvg, execute_symbolic, Ontology, Provenance, Question, QuestionType, SceneGraph,
};
use crate::error::{Error, Result};
use crate::features::{apply_name_edit, EmbeddingTable, ImageFeatures};
use crate::rng::keyed;
use crate::scalar::Scalar;

/// Augmented question with its edited image representation.
#[derive(Clone, Debug, PartialEq)]
pub struct AugSample<T> {
    pub question: Question,
    pub features: ImageFeatures<T>,
    pub replaced_ids: BTreeSet<String>,
}

/// Persisted form of an [`AugSample`]: the edit is replayed on the base
/// features (every replaced name slot becomes the embedding of the answer).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugRecord {
    pub question: Question,
    pub replaced_ids: BTreeSet<String>,
}

impl<T: Scalar> AugSample<T> {
    pub fn record(&self) -> AugRecord {
        AugRecord {
            question: self.question.clone(),
            replaced_ids: self.replaced_ids.clone(),
        }
    }
}

impl AugRecord {
    pub fn materialize<T: Scalar>(
        &self,
        base: &ImageFeatures<T>,
        table: &EmbeddingTable<T>,
    ) -> Result<AugSample<T>> {
        Ok(AugSample {
            question: self.question.clone(),
            features: apply_name_edit(base, &self.replaced_ids, &self.question.answer, table)?,
            replaced_ids: self.replaced_ids.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NotQuery,
    AttributeAnswer,
    Ineligible,
    Unanswerable,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NotQuery => "not_query",
            SkipReason::AttributeAnswer => "attribute_answer",
            SkipReason::Ineligible => "ineligible",
            SkipReason::Unanswerable => "unanswerable",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AugOutcome<T> {
    Samples(Vec<AugSample<T>>),
    Skipped(SkipReason),
}

/// Creates up to `max_variants` samples whose answers are distinct names from
/// the source answer's category. Every query-target object gets the new
/// answer's name embedding; text, boxes, attribute slots and all other
/// objects are unchanged.
#[allow(clippy::too_many_arguments)]
pub fn augment<T: Scalar, R: Rng + ?Sized>(
    question: &Question,
    scene: &SceneGraph,
    features: &ImageFeatures<T>,
    ontology: &Ontology,
    table: &EmbeddingTable<T>,
    max_variants: usize,
    rng: &mut R,
) -> Result<AugOutcome<T>> {
    if question.qtype != QuestionType::Query {
        return Ok(AugOutcome::Skipped(SkipReason::NotQuery));
    }
    if !question.asks_for_name() || !ontology.is_name(&question.answer) {
        return Ok(AugOutcome::Skipped(SkipReason::AttributeAnswer));
    }
    if !eligible_for_fpvg(question, scene) {
        return Ok(AugOutcome::Skipped(SkipReason::Ineligible));
    }
    let outcome = execute_symbolic(&question.program, scene, ontology)?;
    if outcome.answer.as_deref() != Some(question.answer.as_str()) || outcome.targets.is_empty() {
        return Ok(AugOutcome::Skipped(SkipReason::Unanswerable));
    }
    let category = ontology
        .category_of(&question.answer)
        .expect("answer checked to be a name");
    let others: Vec<&String> = ontology
        .members(category)
        .into_iter()
        .flatten()
        .filter(|n| **n != question.answer)
        .collect();
    if others.is_empty() {
        return Err(Error::NotAugmentable(format!(
            "category `{category}` has a single name"
        )));
    }
    let count = max_variants.min(others.len());
    let picked = rand::seq::index::sample(rng, others.len(), count);
    let mut samples = Vec::with_capacity(count);
    for (i, index) in picked.into_iter().enumerate() {
        let new_answer = others[index];
        let mut q = question.clone();
        q.question_id = format!("{}-aug{i:02}", question.question_id);
        q.answer = new_answer.clone();
        q.provenance = Provenance::Augmented {
            source_question_id: question.question_id.clone(),
        };
        samples.push(AugSample {
            question: q,
            features: apply_name_edit(features, &outcome.targets, new_answer, table)?,
            replaced_ids: outcome.targets.clone(),
        });
    }
    Ok(AugOutcome::Samples(samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugParams {
    pub max_variants: usize,
    pub seed: u64,
}

impl Default for AugParams {
    fn default() -> Self {
        AugParams {
            max_variants: 10,
            seed: 0,
        }
    }
}

/// Per-split statistics of the augmentation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugStats {
    pub n_pool: usize,
    pub n_aug_id: usize,
    pub n_aug_ood: usize,
    pub skipped: BTreeMap<String, usize>,
    pub mean_variants_per_question: f64,
    /// Mean number of edited objects per AUG-OOD question.
    pub mean_modified_objects: f64,
    /// Mean number of question-relevant objects per AUG-OOD question.
    pub mean_relevant_objects: f64,
    /// Share of AUG-OOD questions whose relevant set equals the edited set.
    pub full_overlap_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugSplit<T> {
    pub aug_id: Vec<Question>,
    pub aug_ood: Vec<AugSample<T>>,
    pub stats: AugStats,
}

/// AUG-ID (eligible name-answer query questions of `pool`) and AUG-OOD
/// (all their augmentations). `base_features` supplies the image
/// representation that gets edited, keyed by image id.
pub fn build_aug_split<T: Scalar>(
    pool: &[Question],
    scenes: &[SceneGraph],
    base_features: &[ImageFeatures<T>],
    ontology: &Ontology,
    table: &EmbeddingTable<T>,
    params: &AugParams,
) -> Result<AugSplit<T>> {
    let scene_index: HashMap<&str, &SceneGraph> =
        scenes.iter().map(|s| (s.image_id.as_str(), s)).collect();
    let feature_index: HashMap<&str, &ImageFeatures<T>> = base_features
        .iter()
        .map(|f| (f.image_id.as_str(), f))
        .collect();

    let outcomes: Vec<Result<AugOutcome<T>>> = pool
        .par_iter()
        .map(|q| {
            let scene = scene_index
                .get(q.image_id.as_str())
                .ok_or_else(|| Error::InvalidParams(format!("no scene `{}`", q.image_id)))?;
            let features = feature_index
                .get(q.image_id.as_str())
                .ok_or_else(|| Error::InvalidParams(format!("no features for `{}`", q.image_id)))?;
            let mut rng = keyed(params.seed, &q.question_id);
            augment(
                q,
                scene,
                features,
                ontology,
                table,
                params.max_variants,
                &mut rng,
            )
        })
        .collect();

    let mut split = AugSplit {
        aug_id: Vec::new(),
        aug_ood: Vec::new(),
        stats: AugStats {
            n_pool: pool.len(),
            ..AugStats::default()
        },
    };
    for (question, outcome) in pool.iter().zip(outcomes) {
        match outcome? {
            AugOutcome::Samples(samples) => {
                split.aug_id.push(question.clone());
                split.aug_ood.extend(samples);
            }
            AugOutcome::Skipped(reason) => {
                *split
                    .stats
                    .skipped
                    .entry(reason.as_str().to_string())
                    .or_insert(0) += 1;
            }
        }
    }
    let stats = &mut split.stats;
    stats.n_aug_id = split.aug_id.len();
    stats.n_aug_ood = split.aug_ood.len();
    if stats.n_aug_id > 0 {
        stats.mean_variants_per_question = stats.n_aug_ood as f64 / stats.n_aug_id as f64;
    }
    if stats.n_aug_ood > 0 {
        let n = stats.n_aug_ood as f64;
        stats.mean_modified_objects = split
            .aug_ood
            .iter()
            .map(|s| s.replaced_ids.len())
            .sum::<usize>() as f64
            / n;
        stats.mean_relevant_objects = split
            .aug_ood
            .iter()
            .map(|s| s.question.relevant_ids.len())
            .sum::<usize>() as f64
            / n;
        stats.full_overlap_fraction = split
            .aug_ood
            .iter()
            .filter(|s| s.replaced_ids == s.question.relevant_ids)
            .count() as f64
            / n;
    }
    Ok(split)
}
