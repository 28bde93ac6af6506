//! Four-way grounding categorisation by feature modulation, plus answer
//! scoring.

mod report;
mod scoring;

pub use report::{rates_markdown, GroundingReport, Rates};
pub use scoring::{gqa_accuracy, vqa_binary_correct, vqa_soft_accuracy, VQA_ANNOTATORS};

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{eligible_for_fpvg, PredictionRecord, Question, SceneGraph};
use crate::error::{Error, Result};
use crate::features::{modulate, ImageFeatures};
use crate::models::Answerer;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FpvgCategory {
    #[serde(rename = "GGC")]
    Ggc,
    #[serde(rename = "GGW")]
    Ggw,
    #[serde(rename = "BGC")]
    Bgc,
    #[serde(rename = "BGW")]
    Bgw,
}

impl FpvgCategory {
    pub const ALL: [FpvgCategory; 4] = [
        FpvgCategory::Ggc,
        FpvgCategory::Ggw,
        FpvgCategory::Bgc,
        FpvgCategory::Bgw,
    ];

    pub fn from_flags(good_grounding: bool, correct: bool) -> Self {
        match (good_grounding, correct) {
            (true, true) => FpvgCategory::Ggc,
            (true, false) => FpvgCategory::Ggw,
            (false, true) => FpvgCategory::Bgc,
            (false, false) => FpvgCategory::Bgw,
        }
    }

    pub fn good_grounding(self) -> bool {
        matches!(self, FpvgCategory::Ggc | FpvgCategory::Ggw)
    }

    pub fn correct(self) -> bool {
        matches!(self, FpvgCategory::Ggc | FpvgCategory::Bgc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FpvgCategory::Ggc => "GGC",
            FpvgCategory::Ggw => "GGW",
            FpvgCategory::Bgc => "BGC",
            FpvgCategory::Bgw => "BGW",
        }
    }
}

impl fmt::Display for FpvgCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpvgRecord {
    pub question_id: String,
    pub category: FpvgCategory,
    pub a_all: String,
    pub a_rel: String,
    pub a_irr: String,
    pub correct: bool,
}

impl FpvgRecord {
    /// Grounding is good when the relevant objects alone keep the answer
    /// and the irrelevant ones alone change it.
    pub fn from_answers(
        question_id: &str,
        a_all: String,
        a_rel: String,
        a_irr: String,
        gt: &str,
    ) -> Self {
        let good = a_rel == a_all && a_irr != a_all;
        let correct = a_all == gt;
        FpvgRecord {
            question_id: question_id.to_string(),
            category: FpvgCategory::from_flags(good, correct),
            a_all,
            a_rel,
            a_irr,
            correct,
        }
    }

    pub fn prediction(&self) -> PredictionRecord {
        PredictionRecord {
            question_id: self.question_id.clone(),
            answer_all: self.a_all.clone(),
            answer_relevant_only: self.a_rel.clone(),
            answer_irrelevant_only: self.a_irr.clone(),
        }
    }
}

/// Answers the question on all, relevant-only and irrelevant-only features.
pub fn fpvg_classify<T, M>(
    model: &M,
    question: &Question,
    features: &ImageFeatures<T>,
    scene: &SceneGraph,
) -> Result<FpvgRecord>
where
    T: Scalar,
    M: Answerer<T> + ?Sized,
{
    if !eligible_for_fpvg(question, scene) {
        return Err(Error::Ineligible(question.question_id.clone()));
    }
    let relevant: BTreeSet<String> = features
        .vectors
        .keys()
        .filter(|id| question.relevant_ids.contains(*id))
        .cloned()
        .collect();
    let irrelevant: BTreeSet<String> = features
        .vectors
        .keys()
        .filter(|id| !question.relevant_ids.contains(*id))
        .cloned()
        .collect();
    let a_all = model.predict(question, features)?;
    let a_rel = model.predict(question, &modulate(features, &relevant)?)?;
    let a_irr = model.predict(question, &modulate(features, &irrelevant)?)?;
    Ok(FpvgRecord::from_answers(
        &question.question_id,
        a_all,
        a_rel,
        a_irr,
        &question.answer,
    ))
}

/// One question to evaluate with the features the model gets to see.
#[derive(Clone, Copy, Debug)]
pub struct EvalItem<'a, T> {
    pub question: &'a Question,
    pub scene: &'a SceneGraph,
    pub features: &'a ImageFeatures<T>,
}

/// Classifies every item in parallel; records keep the input order.
pub fn evaluate_split<T, M>(model: &M, items: &[EvalItem<'_, T>]) -> Result<GroundingReport<T>>
where
    T: Scalar,
    M: Answerer<T> + ?Sized,
{
    let records = items
        .par_iter()
        .map(|item| fpvg_classify(model, item.question, item.features, item.scene))
        .collect::<Result<Vec<_>>>()?;
    GroundingReport::from_records(records)
}
