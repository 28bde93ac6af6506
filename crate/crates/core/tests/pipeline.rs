use std::collections::{BTreeMap, BTreeSet};

use vgr_core::corpus::{
    build_aug_split, generate_corpus, scene_holdout_split, AugParams, AugSplit, GenParams,
};
use vgr_core::data::{save_corpus, Corpus, Ontology, Provenance, Question};
use vgr_core::experiment::{gt_features, run_experiment, ExperimentParams};
use vgr_core::features::{EmbeddingTable, ImageFeatures};
use vgr_core::fpvg::{evaluate_split, EvalItem};
use vgr_core::models::{Answerer, PriorModel, RuleModel, DEFAULT_TAU};
use vgr_core::rng::seeded;
use vgr_core::vgr::Verdict;

fn small_corpus(seed: u64) -> Corpus {
    let params = GenParams {
        n_scenes: 60,
        seed,
        ..GenParams::default()
    };
    generate_corpus(&Ontology::builtin(), &params).unwrap()
}

fn gt_aug(
    corpus: &Corpus,
    table: &EmbeddingTable<f64>,
) -> (AugSplit<f64>, BTreeMap<String, ImageFeatures<f64>>) {
    let split = scene_holdout_split(&corpus.questions, 0.5, 0.0, &mut seeded(1)).unwrap();
    let pool: Vec<Question> = corpus
        .questions
        .iter()
        .filter(|q| split.id_test.contains(&q.question_id))
        .cloned()
        .collect();
    let gt = gt_features(&corpus.scenes, table);
    let base: Vec<ImageFeatures<f64>> = gt.values().cloned().collect();
    let params = AugParams {
        max_variants: 10,
        seed: 3,
    };
    let aug = build_aug_split(
        &pool,
        &corpus.scenes,
        &base,
        &corpus.ontology,
        table,
        &params,
    )
    .unwrap();
    (aug, gt)
}

#[test]
fn generation_is_deterministic_to_the_byte() {
    let a = small_corpus(9);
    let b = small_corpus(9);
    assert_eq!(a, b);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    save_corpus(da.path(), &a).unwrap();
    save_corpus(db.path(), &b).unwrap();
    for file in [
        Corpus::SCENES_FILE,
        Corpus::QUESTIONS_FILE,
        Corpus::ONTOLOGY_FILE,
    ] {
        assert_eq!(
            std::fs::read(da.path().join(file)).unwrap(),
            std::fs::read(db.path().join(file)).unwrap(),
            "{file}"
        );
    }
    assert_ne!(small_corpus(10).questions, a.questions);
}

#[test]
fn augmentation_invariants_hold_on_every_sample() {
    let corpus = small_corpus(4);
    let table = EmbeddingTable::hashed(64, 0);
    let (aug, _) = gt_aug(&corpus, &table);
    assert!(!aug.aug_ood.is_empty());
    let sources: BTreeMap<&str, &Question> = corpus
        .questions
        .iter()
        .map(|q| (q.question_id.as_str(), q))
        .collect();
    let rule = RuleModel::new(table.clone(), corpus.ontology.clone(), DEFAULT_TAU).unwrap();
    let mut siblings: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for s in &aug.aug_ood {
        let Provenance::Augmented { source_question_id } = &s.question.provenance else {
            panic!("augmented sample without provenance");
        };
        let source = sources[source_question_id.as_str()];
        assert_eq!(s.question.text, source.text);
        assert_eq!(s.question.program, source.program);
        assert_ne!(s.question.answer, source.answer);
        assert_eq!(
            corpus.ontology.category_of(&s.question.answer),
            corpus.ontology.category_of(&source.answer)
        );
        assert!(siblings
            .entry(source_question_id)
            .or_default()
            .insert(&s.question.answer));
        let expected = table.embed(&s.question.answer);
        for id in &s.replaced_ids {
            assert_eq!(s.features.vectors[id].name_slot, expected);
        }
        assert_eq!(
            rule.predict(&s.question, &s.features).unwrap(),
            s.question.answer
        );
    }
    for (source, answers) in siblings {
        let category = corpus
            .ontology
            .category_of(&sources[source].answer)
            .unwrap();
        let size = corpus.ontology.members(category).unwrap().len();
        assert_eq!(answers.len(), 10.min(size - 1), "{source}");
    }
}

#[test]
fn rule_model_agrees_with_the_generator_on_ground_truth() {
    let corpus = small_corpus(5);
    let table = EmbeddingTable::hashed(64, 0);
    let (aug, gt) = gt_aug(&corpus, &table);
    let rule = RuleModel::new(table, corpus.ontology.clone(), DEFAULT_TAU).unwrap();
    for q in &aug.aug_id {
        assert_eq!(
            rule.predict(q, &gt[&q.image_id]).unwrap(),
            q.answer,
            "{}",
            q.question_id
        );
    }
}

#[test]
fn prior_model_is_never_well_grounded() {
    let corpus = small_corpus(6);
    let table = EmbeddingTable::hashed(64, 0);
    let (aug, gt) = gt_aug(&corpus, &table);
    let prior = PriorModel::fit(&corpus.questions, &corpus.ontology);
    let items: Vec<EvalItem<f64>> = aug
        .aug_id
        .iter()
        .map(|q| EvalItem {
            question: q,
            scene: corpus.scene(&q.image_id).unwrap(),
            features: &gt[&q.image_id],
        })
        .collect();
    let report = evaluate_split(&prior, &items).unwrap();
    assert_eq!(report.rates.ggc, 0.0);
    assert_eq!(report.rates.ggw, 0.0);
    assert_eq!(report.rates.bgc, report.rates.acc);
}

#[test]
fn small_experiment_produces_consistent_rows() {
    let mut params = ExperimentParams::default();
    params.corpus.n_scenes = 80;
    params.linear.epochs = 3;
    params.embedding.dim = 32;
    let a = run_experiment(&params).unwrap();
    assert_eq!(a.report.rows.len(), 10);
    for row in &a.report.rows {
        assert!(row.rates.identity_error() < 1e-9, "{}", row.key());
        assert_eq!(row.corollaries[0].measured_gap, row.rates.bgc);
    }
    let prior = a.report.row("prior", "none", "DET", "AUG-OOD").unwrap();
    assert_eq!(prior.rates.ggc, 0.0);
    let rule_gt = a.report.row("rule", "none", "GT", "AUG-OOD").unwrap();
    assert_eq!(rule_gt.rates.acc, 100.0);
    assert!(rule_gt
        .corollaries
        .iter()
        .all(|c| c.verdict == Verdict::Pass));
    assert_eq!(a.report.loss_det.len(), 3);

    let b = run_experiment(&params).unwrap();
    assert_eq!(
        serde_json::to_string(&a.report).unwrap(),
        serde_json::to_string(&b.report).unwrap()
    );
}
