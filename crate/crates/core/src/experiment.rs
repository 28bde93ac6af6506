//! DET-vs-INF comparison: the same linear model trained on noisy detector
//! features and on features whose question-relevant objects were corrected
//! (Infusion), both tested on AUG-ID and AUG-OOD.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_aug_split, generate_corpus, scene_holdout_split, AugParams, AugSplit, AugStats,
    GenParams, IntRange,
};
use crate::data::{Corpus, Question, SceneGraph, Split};
use crate::error::{Error, Result};
use crate::features::{
    infuse, simulate_detection, symbolic_features, DetNoiseParams, EmbeddingTable, ImageFeatures,
    DEFAULT_DIM,
};
use crate::fpvg::{evaluate_split, rates_markdown, EvalItem, GroundingReport, Rates};
use crate::models::{
    train_linear, AnswerVocab, Answerer, LinearHyper, LinearModel, PriorModel, RuleModel,
    DEFAULT_TAU,
};
use crate::rng::{derive_seed, keyed, seeded};
use crate::scalar::Scalar;
use crate::vgr::{check_corollaries, CorollaryFinding, CorollaryTolerance, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingParams {
    pub dim: usize,
    pub hash_seed: u64,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            dim: DEFAULT_DIM,
            hash_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoldoutParams {
    /// Share of images whose questions form the augmentation pool.
    pub test_fraction: f64,
    pub dev_fraction: f64,
}

impl Default for HoldoutParams {
    fn default() -> Self {
        HoldoutParams {
            test_fraction: 0.3,
            dev_fraction: 0.1,
        }
    }
}

/// Everything a reproduction run depends on. The seeds inside the nested
/// sections are ignored: each stage derives its own from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub seed: u64,
    pub corpus: GenParams,
    pub noise: DetNoiseParams,
    pub split: HoldoutParams,
    pub augment: AugParams,
    pub linear: LinearHyper,
    pub embedding: EmbeddingParams,
    pub tau: f64,
    pub tolerance: CorollaryTolerance,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            seed: 0,
            corpus: GenParams {
                n_scenes: 1000,
                objects_per_scene: IntRange::new(3, 5),
                attrs_per_object: IntRange::new(0, 1),
                categories_per_scene: IntRange::new(2, 3),
                ..GenParams::default()
            },
            noise: DetNoiseParams::default(),
            split: HoldoutParams::default(),
            augment: AugParams::default(),
            linear: LinearHyper {
                lr: 2.0,
                ..LinearHyper::default()
            },
            embedding: EmbeddingParams::default(),
            tau: DEFAULT_TAU,
            tolerance: CorollaryTolerance::default(),
        }
    }
}

impl ExperimentParams {
    /// Copy with every stage seed derived from `seed`.
    pub fn resolved(&self) -> Self {
        let mut p = self.clone();
        p.corpus.seed = derive_seed(self.seed, "corpus");
        p.augment.seed = derive_seed(self.seed, "augment");
        p.linear.seed = derive_seed(self.seed, "linear");
        p
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, "split")
    }

    pub fn detection_seed(&self) -> u64 {
        derive_seed(self.seed, "detection")
    }
}

/// Ground-truth features for every scene, keyed by image id.
pub fn gt_features<T: Scalar>(
    scenes: &[SceneGraph],
    table: &EmbeddingTable<T>,
) -> BTreeMap<String, ImageFeatures<T>> {
    scenes
        .par_iter()
        .map(|s| (s.image_id.clone(), symbolic_features(s, table)))
        .collect()
}

/// Simulated-detector features; each image draws from its own keyed stream.
pub fn det_features<T: Scalar>(
    corpus: &Corpus,
    noise: DetNoiseParams,
    table: &EmbeddingTable<T>,
    seed: u64,
) -> Result<BTreeMap<String, ImageFeatures<T>>> {
    corpus
        .scenes
        .par_iter()
        .map(|s| {
            let mut rng = keyed(seed, &s.image_id);
            let detected = simulate_detection(s, &corpus.ontology, noise, &mut rng)?;
            Ok((s.image_id.clone(), symbolic_features(&detected, table)))
        })
        .collect()
}

/// Questions resolved by id, in the order of `ids`.
pub fn select_questions<'a>(corpus: &'a Corpus, ids: &[String]) -> Result<Vec<&'a Question>> {
    let index: HashMap<&str, &Question> = corpus
        .questions
        .iter()
        .map(|q| (q.question_id.as_str(), q))
        .collect();
    ids.iter()
        .map(|id| {
            index.get(id.as_str()).copied().ok_or_else(|| {
                Error::InvalidParams(format!("split references unknown question `{id}`"))
            })
        })
        .collect()
}

/// Evaluation items pairing each question with its scene and image features.
pub fn eval_items<'a, T: Scalar>(
    questions: impl IntoIterator<Item = &'a Question>,
    corpus: &'a Corpus,
    features: &'a BTreeMap<String, ImageFeatures<T>>,
) -> Result<Vec<EvalItem<'a, T>>> {
    questions
        .into_iter()
        .map(|q| {
            let scene = corpus
                .scene(&q.image_id)
                .ok_or_else(|| Error::InvalidParams(format!("no scene `{}`", q.image_id)))?;
            let features = features
                .get(&q.image_id)
                .ok_or_else(|| Error::InvalidParams(format!("no features for `{}`", q.image_id)))?;
            Ok(EvalItem {
                question: q,
                scene,
                features,
            })
        })
        .collect()
}

/// Evaluation items for augmented samples, which carry their own features.
pub fn aug_items<'a, T: Scalar>(
    aug: &'a AugSplit<T>,
    corpus: &'a Corpus,
) -> Result<Vec<EvalItem<'a, T>>> {
    aug.aug_ood
        .iter()
        .map(|s| {
            let scene = corpus.scene(&s.question.image_id).ok_or_else(|| {
                Error::InvalidParams(format!("no scene `{}`", s.question.image_id))
            })?;
            Ok(EvalItem {
                question: &s.question,
                scene,
                features: &s.features,
            })
        })
        .collect()
}

/// One evaluated (model, training features, test split) combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    /// Features the model was trained on (`DET`, `INF`) or `none`.
    pub trained_on: String,
    /// Features the test split was built from.
    pub test_features: String,
    pub split: String,
    pub n_questions: usize,
    pub rates: Rates<f64>,
    pub corollaries: [CorollaryFinding<f64>; 3],
}

impl ResultRow {
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.model, self.trained_on, self.test_features, self.split
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub params: ExperimentParams,
    pub n_scenes: usize,
    pub n_questions: usize,
    pub n_train: usize,
    pub aug_stats: AugStats,
    pub mean_category_size: f64,
    pub rows: Vec<ResultRow>,
    pub loss_det: Vec<f64>,
    pub loss_inf: Vec<f64>,
}

impl ExperimentReport {
    pub fn row(
        &self,
        model: &str,
        trained_on: &str,
        test_features: &str,
        split: &str,
    ) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.model == model
                && r.trained_on == trained_on
                && r.test_features == test_features
                && r.split == split
        })
    }

    pub fn to_markdown(&self) -> String {
        let rows: Vec<(String, Rates<f64>)> = self
            .rows
            .iter()
            .map(|r| {
                (
                    format!(
                        "{} ({}) {} on {} features",
                        r.model, r.trained_on, r.split, r.test_features
                    ),
                    r.rates,
                )
            })
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# DET vs INF\n\n{} scenes, {} questions, {} training questions, {} AUG-ID and {} AUG-OOD questions.\n",
            self.n_scenes, self.n_questions, self.n_train, self.aug_stats.n_aug_id, self.aug_stats.n_aug_ood
        );
        out.push_str(&rates_markdown(&rows));
        out.push_str("\n| | C1 gap | C2 gap | C3 gap | Verdicts |\n|---|---:|---:|---:|---|\n");
        for (r, (label, _)) in self.rows.iter().zip(&rows) {
            let verdicts: Vec<&str> = r
                .corollaries
                .iter()
                .map(|f| match f.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Violated => "violated",
                })
                .collect();
            let _ = writeln!(
                out,
                "| {label} | {:.2} | {:.2} | {:.2} | {} |",
                r.corollaries[0].measured_gap,
                r.corollaries[1].measured_gap,
                r.corollaries[2].measured_gap,
                verdicts.join(" / ")
            );
        }
        out
    }

    /// Bar-chart data: one line per linear-model bar.
    pub fn fig3_csv(&self) -> String {
        let mut out = String::from("trained_on,split,acc,fpvg_plus,ggc,ggw\n");
        for r in self.rows.iter().filter(|r| r.model == "linear") {
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.4},{:.4}",
                r.trained_on, r.split, r.rates.acc, r.rates.fpvg_plus, r.rates.ggc, r.rates.ggw
            );
        }
        out
    }
}

/// Report plus the per-question evaluations, keyed by [`ResultRow::key`].
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub evaluations: BTreeMap<String, GroundingReport<f64>>,
    pub corpus: Corpus,
    pub split: Split,
    pub aug_det: AugSplit<f64>,
    pub aug_gt: AugSplit<f64>,
}

struct Evaluator {
    tolerance: CorollaryTolerance,
    rows: Vec<ResultRow>,
    evaluations: BTreeMap<String, GroundingReport<f64>>,
}

impl Evaluator {
    fn run(
        &mut self,
        model: &dyn Answerer<f64>,
        labels: [&str; 4],
        items: &[EvalItem<'_, f64>],
    ) -> Result<()> {
        let report = evaluate_split(model, items)?;
        let row = ResultRow {
            model: labels[0].into(),
            trained_on: labels[1].into(),
            test_features: labels[2].into(),
            split: labels[3].into(),
            n_questions: report.n_questions,
            rates: report.rates,
            corollaries: check_corollaries(&report.rates, &self.tolerance),
        };
        self.evaluations.insert(row.key(), report);
        self.rows.push(row);
        Ok(())
    }
}

pub fn run_experiment(params: &ExperimentParams) -> Result<ExperimentOutcome> {
    let p = params.resolved();
    p.tolerance.validate()?;
    let ontology = crate::data::Ontology::builtin();
    let corpus = generate_corpus(&ontology, &p.corpus)?;
    let table = EmbeddingTable::<f64>::hashed(p.embedding.dim, p.embedding.hash_seed);
    table.ensure_distinct(
        ontology
            .names()
            .chain(ontology.attribute_vocab().iter().map(String::as_str)),
    )?;

    let split = scene_holdout_split(
        &corpus.questions,
        p.split.test_fraction,
        p.split.dev_fraction,
        &mut seeded(p.split_seed()),
    )?;
    let gt = gt_features(&corpus.scenes, &table);
    let det = det_features(&corpus, p.noise, &table, p.detection_seed())?;

    let train = select_questions(&corpus, &split.train)?;
    let mut pool_ids = split.id_test.clone();
    pool_ids.extend(split.ood_test.iter().cloned());
    let pool: Vec<Question> = select_questions(&corpus, &pool_ids)?
        .into_iter()
        .cloned()
        .collect();

    let det_list: Vec<ImageFeatures<f64>> = det.values().cloned().collect();
    let gt_list: Vec<ImageFeatures<f64>> = gt.values().cloned().collect();
    let aug_det = build_aug_split(
        &pool,
        &corpus.scenes,
        &det_list,
        &ontology,
        &table,
        &p.augment,
    )?;
    let aug_gt = build_aug_split(
        &pool,
        &corpus.scenes,
        &gt_list,
        &ontology,
        &table,
        &p.augment,
    )?;

    // Training views: DET as detected; INF with relevant objects corrected.
    let inf_train: Vec<ImageFeatures<f64>> = train
        .par_iter()
        .map(|q| {
            let scene = corpus
                .scene(&q.image_id)
                .expect("split questions come from the corpus");
            infuse(&det[&q.image_id], scene, &q.relevant_ids, &table)
        })
        .collect::<Result<_>>()?;
    let det_pairs: Vec<(&Question, &ImageFeatures<f64>)> =
        train.iter().map(|q| (*q, &det[&q.image_id])).collect();
    let inf_pairs: Vec<(&Question, &ImageFeatures<f64>)> =
        train.iter().copied().zip(&inf_train).collect();

    let vocab = AnswerVocab::build(train.iter().copied(), &ontology)?;
    let (linear_det, linear_inf) = rayon::join(
        || train_linear(&det_pairs, vocab.clone(), &p.linear),
        || train_linear(&inf_pairs, vocab.clone(), &p.linear),
    );
    let (linear_det, linear_inf): (LinearModel<f64>, LinearModel<f64>) = (linear_det?, linear_inf?);
    let prior = PriorModel::fit(train.iter().copied(), &ontology);
    let rule = RuleModel::new(table.clone(), ontology.clone(), p.tau)?;

    let id_det = eval_items(aug_det.aug_id.iter(), &corpus, &det)?;
    let id_gt = eval_items(aug_gt.aug_id.iter(), &corpus, &gt)?;
    let ood_det = aug_items(&aug_det, &corpus)?;
    let ood_gt = aug_items(&aug_gt, &corpus)?;

    let mut ev = Evaluator {
        tolerance: p.tolerance,
        rows: Vec::new(),
        evaluations: BTreeMap::new(),
    };
    ev.run(&linear_det, ["linear", "DET", "DET", "AUG-ID"], &id_det)?;
    ev.run(&linear_det, ["linear", "DET", "DET", "AUG-OOD"], &ood_det)?;
    ev.run(&linear_inf, ["linear", "INF", "DET", "AUG-ID"], &id_det)?;
    ev.run(&linear_inf, ["linear", "INF", "DET", "AUG-OOD"], &ood_det)?;
    ev.run(&prior, ["prior", "none", "DET", "AUG-ID"], &id_det)?;
    ev.run(&prior, ["prior", "none", "DET", "AUG-OOD"], &ood_det)?;
    ev.run(&rule, ["rule", "none", "DET", "AUG-ID"], &id_det)?;
    ev.run(&rule, ["rule", "none", "DET", "AUG-OOD"], &ood_det)?;
    ev.run(&rule, ["rule", "none", "GT", "AUG-ID"], &id_gt)?;
    ev.run(&rule, ["rule", "none", "GT", "AUG-OOD"], &ood_gt)?;

    let report = ExperimentReport {
        mean_category_size: mean_answer_category_size(&aug_det.aug_id, &ontology),
        params: p,
        n_scenes: corpus.scenes.len(),
        n_questions: corpus.questions.len(),
        n_train: train.len(),
        aug_stats: aug_det.stats.clone(),
        rows: ev.rows,
        loss_det: linear_det.loss_history.clone(),
        loss_inf: linear_inf.loss_history.clone(),
    };
    Ok(ExperimentOutcome {
        report,
        evaluations: ev.evaluations,
        corpus,
        split,
        aug_det,
        aug_gt,
    })
}

/// Mean size of the answer categories of `questions`, one term per question.
pub fn mean_answer_category_size(questions: &[Question], ontology: &crate::data::Ontology) -> f64 {
    let sizes: Vec<usize> = questions
        .iter()
        .filter_map(|q| ontology.category_of(&q.answer))
        .filter_map(|c| ontology.members(c).map(|m| m.len()))
        .collect();
    if sizes.is_empty() {
        0.0
    } else {
        sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
    }
}
