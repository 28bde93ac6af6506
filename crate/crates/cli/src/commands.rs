//! One function per subcommand. Every command reads its upstream artifacts
//! from the output directory, writes its own, and records a manifest.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vgr_core::corpus::{
    build_aug_split, changing_priors_split, frequency_split_full, generate_corpus,
    scene_holdout_split, AugParams, AugRecord, AugStats, SplitOutcome,
};
use vgr_core::data::{
    load_corpus, read_jsonl, save_corpus, validate_corpus, write_jsonl, Corpus, Ontology, Question,
    Split, SCHEMA_VERSION,
};
use vgr_core::experiment::{det_features, gt_features, run_experiment, select_questions};
use vgr_core::features::{infuse, ImageFeatures};
use vgr_core::fpvg::{evaluate_split, rates_markdown, EvalItem, GroundingReport};
use vgr_core::models::{
    load_checkpoint, save_checkpoint, train_linear, AnswerVocab, Answerer, Checkpoint, LinearModel,
    PriorModel, RuleModel,
};
use vgr_core::rng::{derive_seed, seeded};
use vgr_core::vgr::{check_corollaries, run_fixtures, run_fixtures_in, CorollaryFinding, Verdict};
use vgr_core::EmbeddingTable;

use crate::config::{EvalPart, FeatureSource, ModelKind, RunConfig, SplitMethod};
use crate::error::CliError;
use crate::manifest::Recorder;

pub const SPLIT_FILE: &str = "split.json";
pub const AUG_ID_FILE: &str = "aug_id.jsonl";
pub const AUG_OOD_FILE: &str = "aug_ood.jsonl";
pub const AUG_STATS_FILE: &str = "aug_stats.json";
pub const MODEL_FILE: &str = "model.json";
pub const RECORDS_FILE: &str = "fpvg_records.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const VERDICTS_FILE: &str = "vgr_verdicts.json";
pub const FIXTURE_VERDICTS_FILE: &str = "fixture_verdicts.json";
pub const REPRODUCE_JSON: &str = "reproduce.json";
pub const REPRODUCE_MD: &str = "reproduce.md";
pub const FIG3_CSV: &str = "fig3.csv";

/// What a command wants printed and how the process should exit.
pub struct Outcome {
    pub message: String,
    pub exit_code: u8,
}

impl Outcome {
    fn ok(message: String) -> Self {
        Outcome {
            message,
            exit_code: 0,
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(
    path: &Path,
    producer: &'static str,
) -> Result<T, CliError> {
    let text = fs::read_to_string(require(path, producer)?).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn require<'a>(path: &'a Path, producer: &'static str) -> Result<&'a Path, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Missing {
            path: path.to_path_buf(),
            producer,
        })
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn corpus_files(out: &Path) -> [PathBuf; 3] {
    [
        Corpus::ONTOLOGY_FILE,
        Corpus::SCENES_FILE,
        Corpus::QUESTIONS_FILE,
    ]
    .map(|f| out.join(f))
}

fn load_generated(out: &Path, rec: &mut Recorder) -> Result<Corpus, CliError> {
    for path in corpus_files(out) {
        require(&path, "gen")?;
        rec.input(path);
    }
    Ok(load_corpus(out)?)
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    schema: u32,
    #[serde(flatten)]
    outcome: SplitOutcome,
}

fn load_split(out: &Path, rec: &mut Recorder) -> Result<Split, CliError> {
    let path = out.join(SPLIT_FILE);
    let file: SplitFile = read_json(&path, "split")?;
    rec.input(path);
    Ok(file.outcome.split)
}

fn table(cfg: &RunConfig) -> EmbeddingTable {
    EmbeddingTable::hashed(cfg.embedding.dim, cfg.embedding.hash_seed)
}

/// Per-image features of the requested kind (`gt` or `det`).
fn image_features(
    corpus: &Corpus,
    cfg: &RunConfig,
    source: FeatureSource,
    table: &EmbeddingTable,
) -> Result<BTreeMap<String, ImageFeatures<f64>>, CliError> {
    match source {
        FeatureSource::Gt => Ok(gt_features(&corpus.scenes, table)),
        FeatureSource::Det => Ok(det_features(corpus, cfg.noise, table, detection_seed(cfg))?),
        FeatureSource::Inf => Err(CliError::Config(
            "infused features exist per question, not per image".into(),
        )),
    }
}

fn detection_seed(cfg: &RunConfig) -> u64 {
    cfg.experiment().detection_seed()
}

pub fn gen(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    ensure_dir(out)?;
    let mut params = cfg.corpus.clone();
    params.seed = derive_seed(cfg.seed, "corpus");
    let corpus = generate_corpus(&Ontology::builtin(), &params)?;
    let report = validate_corpus(&corpus.scenes, &corpus.questions, &corpus.ontology);
    if !report.is_ok() {
        let first = &report.violations[0];
        return Err(CliError::Validation(format!(
            "{} violations, first: {}: {}",
            report.violations.len(),
            first.subject,
            first.message
        )));
    }
    save_corpus(out, &corpus)?;
    let mut rec = Recorder::new(out, "gen");
    for path in corpus_files(out) {
        rec.output(path);
    }
    rec.finish(cfg.seed, cfg)?;
    Ok(Outcome::ok(format!(
        "generated {} scenes and {} questions in {}",
        corpus.scenes.len(),
        corpus.questions.len(),
        out.display()
    )))
}

pub fn split(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    let mut rec = Recorder::new(out, "split");
    let corpus = load_generated(out, &mut rec)?;
    let mut rng = seeded(cfg.experiment().split_seed());
    let outcome = match cfg.split.method {
        SplitMethod::SceneHoldout => SplitOutcome {
            split: scene_holdout_split(
                &corpus.questions,
                cfg.split.holdout.test_fraction,
                cfg.split.holdout.dev_fraction,
                &mut rng,
            )?,
            warnings: Vec::new(),
            type_stats: Vec::new(),
        },
        SplitMethod::ChangingPriors => changing_priors_split(
            &corpus.questions,
            &corpus.ontology,
            &cfg.split.changing_priors,
            &mut rng,
        )?,
        SplitMethod::Frequency => frequency_split_full(
            &corpus.questions,
            &corpus.ontology,
            &cfg.split.frequency,
            &mut rng,
        )?,
    };
    let overlaps = outcome.split.overlaps();
    if !overlaps.is_empty() {
        return Err(CliError::Validation(format!(
            "split parts overlap on {} ids",
            overlaps.len()
        )));
    }
    let path = out.join(SPLIT_FILE);
    let s = &outcome.split;
    let message = format!(
        "{} split: train {}, dev {}, id-test {}, ood-test {} ({} warnings)",
        s.name,
        s.train.len(),
        s.dev.len(),
        s.id_test.len(),
        s.ood_test.len(),
        outcome.warnings.len()
    );
    write_json(
        &path,
        &SplitFile {
            schema: SCHEMA_VERSION,
            outcome,
        },
    )?;
    rec.output(path);
    rec.finish(cfg.seed, cfg)?;
    Ok(Outcome::ok(message))
}

#[derive(Serialize, Deserialize)]
struct AugStatsFile {
    schema: u32,
    base_features: FeatureSource,
    stats: AugStats,
}

pub fn augment(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    let mut rec = Recorder::new(out, "augment");
    let corpus = load_generated(out, &mut rec)?;
    let split = load_split(out, &mut rec)?;
    let table = table(cfg);
    let base = image_features(&corpus, cfg, cfg.augment.base_features, &table)?;
    let mut pool_ids = split.id_test.clone();
    pool_ids.extend(split.ood_test.iter().cloned());
    let pool: Vec<Question> = select_questions(&corpus, &pool_ids)?
        .into_iter()
        .cloned()
        .collect();
    let base_list: Vec<ImageFeatures<f64>> = base.into_values().collect();
    let params = AugParams {
        max_variants: cfg.augment.max_variants,
        seed: cfg.experiment().resolved().augment.seed,
    };
    let aug = build_aug_split(
        &pool,
        &corpus.scenes,
        &base_list,
        &corpus.ontology,
        &table,
        &params,
    )?;

    let id_path = out.join(AUG_ID_FILE);
    let ood_path = out.join(AUG_OOD_FILE);
    let stats_path = out.join(AUG_STATS_FILE);
    write_jsonl(&id_path, &aug.aug_id)?;
    let records: Vec<AugRecord> = aug.aug_ood.iter().map(|s| s.record()).collect();
    write_jsonl(&ood_path, &records)?;
    write_json(
        &stats_path,
        &AugStatsFile {
            schema: SCHEMA_VERSION,
            base_features: cfg.augment.base_features,
            stats: aug.stats.clone(),
        },
    )?;
    for p in [id_path, ood_path, stats_path] {
        rec.output(p);
    }
    rec.finish(cfg.seed, cfg)?;
    Ok(Outcome::ok(format!(
        "AUG-ID {} questions, AUG-OOD {} samples ({:.2} per question, {:.2} edited objects each)",
        aug.stats.n_aug_id,
        aug.stats.n_aug_ood,
        aug.stats.mean_variants_per_question,
        aug.stats.mean_modified_objects
    )))
}

pub fn train(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    let mut rec = Recorder::new(out, "train");
    let corpus = load_generated(out, &mut rec)?;
    let split = load_split(out, &mut rec)?;
    let train = select_questions(&corpus, &split.train)?;
    let (checkpoint, message) = match cfg.model.kind {
        ModelKind::Prior => {
            let model = PriorModel::fit(train.iter().copied(), &corpus.ontology);
            let message = format!(
                "prior model over {} question types",
                model.histograms().len()
            );
            (Checkpoint::Prior(model), message)
        }
        ModelKind::Rule => (
            Checkpoint::Rule { tau: cfg.model.tau },
            format!("rule model with tau {}", cfg.model.tau),
        ),
        ModelKind::Linear => {
            let table = table(cfg);
            let features: Vec<ImageFeatures<f64>> = match cfg.model.train_features {
                FeatureSource::Inf => {
                    let det = image_features(&corpus, cfg, FeatureSource::Det, &table)?;
                    let scenes: HashMap<&str, _> = corpus
                        .scenes
                        .iter()
                        .map(|s| (s.image_id.as_str(), s))
                        .collect();
                    train
                        .iter()
                        .map(|q| {
                            infuse(
                                &det[&q.image_id],
                                scenes[q.image_id.as_str()],
                                &q.relevant_ids,
                                &table,
                            )
                        })
                        .collect::<vgr_core::Result<_>>()?
                }
                source => {
                    let per_image = image_features(&corpus, cfg, source, &table)?;
                    train
                        .iter()
                        .map(|q| per_image[&q.image_id].clone())
                        .collect()
                }
            };
            let pairs: Vec<(&Question, &ImageFeatures<f64>)> =
                train.iter().copied().zip(&features).collect();
            let vocab = AnswerVocab::build(train.iter().copied(), &corpus.ontology)?;
            let mut hyper = cfg.model.linear.clone();
            hyper.seed = cfg.experiment().resolved().linear.seed;
            let model: LinearModel<f64> = train_linear(&pairs, vocab, &hyper)?;
            let message = format!(
                "linear model on {} {} questions, final loss {:.4}",
                pairs.len(),
                cfg.model.train_features.label(),
                model.loss_history.last().copied().unwrap_or(f64::NAN)
            );
            (Checkpoint::Linear(model), message)
        }
    };
    let path = out.join(MODEL_FILE);
    save_checkpoint(&path, &checkpoint)?;
    rec.output(path);
    rec.finish(cfg.seed, cfg)?;
    Ok(Outcome::ok(message))
}

enum Loaded {
    Prior(PriorModel),
    Linear(LinearModel<f64>),
    Rule(RuleModel<f64>),
}

impl Loaded {
    fn answerer(&self) -> &dyn Answerer<f64> {
        match self {
            Loaded::Prior(m) => m,
            Loaded::Linear(m) => m,
            Loaded::Rule(m) => m,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Loaded::Prior(_) => "prior",
            Loaded::Linear(_) => "linear",
            Loaded::Rule(_) => "rule",
        }
    }
}

pub fn evaluate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    let mut rec = Recorder::new(out, "evaluate");
    let corpus = load_generated(out, &mut rec)?;
    let table = table(cfg);
    let model_path = out.join(MODEL_FILE);
    require(&model_path, "train")?;
    let model = match load_checkpoint(&model_path)? {
        Checkpoint::Prior(m) => Loaded::Prior(m),
        Checkpoint::Linear(m) => Loaded::Linear(m),
        Checkpoint::Rule { tau } => {
            Loaded::Rule(RuleModel::new(table.clone(), corpus.ontology.clone(), tau)?)
        }
    };
    rec.input(model_path);

    let scenes: HashMap<&str, _> = corpus
        .scenes
        .iter()
        .map(|s| (s.image_id.as_str(), s))
        .collect();
    let scene_of = |q: &Question| {
        scenes.get(q.image_id.as_str()).copied().ok_or_else(|| {
            CliError::Validation(format!("question `{}` names unknown image", q.question_id))
        })
    };

    let part = cfg.evaluate.part;
    let (questions, per_question_features): (Vec<Question>, Option<Vec<ImageFeatures<f64>>>);
    let features_source;
    match part {
        EvalPart::AugId | EvalPart::AugOod => {
            let stats_path = out.join(AUG_STATS_FILE);
            let stats: AugStatsFile = read_json(&stats_path, "augment")?;
            rec.input(stats_path);
            features_source = stats.base_features;
            if part == EvalPart::AugId {
                let path = out.join(AUG_ID_FILE);
                questions = read_jsonl(require(&path, "augment")?)?;
                rec.input(path);
                per_question_features = None;
            } else {
                let path = out.join(AUG_OOD_FILE);
                let records: Vec<AugRecord> = read_jsonl(require(&path, "augment")?)?;
                rec.input(path);
                let base = image_features(&corpus, cfg, features_source, &table)?;
                let mut feats = Vec::with_capacity(records.len());
                let mut qs = Vec::with_capacity(records.len());
                for r in records {
                    let base_features = base.get(&r.question.image_id).ok_or_else(|| {
                        CliError::Validation(format!(
                            "augmented question names unknown image `{}`",
                            r.question.image_id
                        ))
                    })?;
                    feats.push(r.materialize(base_features, &table)?.features);
                    qs.push(r.question);
                }
                questions = qs;
                per_question_features = Some(feats);
            }
        }
        _ => {
            let split = load_split(out, &mut rec)?;
            let ids = match part {
                EvalPart::Dev => &split.dev,
                EvalPart::IdTest => &split.id_test,
                _ => &split.ood_test,
            };
            questions = select_questions(&corpus, ids)?
                .into_iter()
                .cloned()
                .collect();
            features_source = cfg.evaluate.features;
            per_question_features = None;
        }
    }
    let per_image = match &per_question_features {
        Some(_) => BTreeMap::new(),
        None => image_features(&corpus, cfg, features_source, &table)?,
    };
    let mut items = Vec::with_capacity(questions.len());
    for (i, q) in questions.iter().enumerate() {
        let features = match &per_question_features {
            Some(f) => &f[i],
            None => per_image.get(&q.image_id).ok_or_else(|| {
                CliError::Validation(format!("no features for image `{}`", q.image_id))
            })?,
        };
        items.push(EvalItem {
            question: q,
            scene: scene_of(q)?,
            features,
        });
    }
    let report: GroundingReport<f64> = evaluate_split(model.answerer(), &items)?;

    let records_path = out.join(RECORDS_FILE);
    let predictions_path = out.join(PREDICTIONS_FILE);
    let json_path = out.join(REPORT_JSON);
    let md_path = out.join(REPORT_MD);
    write_jsonl(&records_path, &report.records)?;
    let predictions: Vec<_> = report.records.iter().map(|r| r.prediction()).collect();
    write_jsonl(&predictions_path, &predictions)?;
    write_json(&json_path, &report)?;
    let label = format!(
        "{} on {} ({} features)",
        model.name(),
        part.label(),
        features_source.label()
    );
    let md = format!(
        "# Grounding report\n\n{} questions.\n\n{}",
        report.n_questions,
        rates_markdown(&[(label.clone(), report.rates)])
    );
    fs::write(&md_path, md).map_err(|e| CliError::io(&md_path, e))?;
    for p in [records_path, predictions_path, json_path, md_path] {
        rec.output(p);
    }
    rec.finish(cfg.seed, cfg)?;
    let r = report.rates;
    Ok(Outcome::ok(format!(
        "{label}: n {} acc {:.2} FPVG+ {:.2} GGC {:.2} GGW {:.2} BGC {:.2} BGW {:.2}",
        report.n_questions, r.acc, r.fpvg_plus, r.ggc, r.ggw, r.bgc, r.bgw
    )))
}

#[derive(Serialize, Deserialize)]
struct VerdictFile {
    schema: u32,
    report: String,
    findings: Vec<CorollaryFinding<f64>>,
}

pub fn check_vgr(cfg: &RunConfig, report_path: Option<&Path>) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    ensure_dir(out)?;
    let mut rec = Recorder::new(out, "check-vgr");
    let path = report_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.join(REPORT_JSON));
    let report: GroundingReport<f64> = read_json(&path, "evaluate")?;
    rec.input(path.clone());
    let error = report.rates.identity_error();
    if error > 1e-9 {
        return Err(CliError::Validation(format!(
            "report identities off by {error:e}"
        )));
    }
    let findings = check_corollaries(&report.rates, &cfg.tolerance).to_vec();
    let lines: Vec<String> = findings
        .iter()
        .map(|f| {
            format!(
                "{}: gap {:.2}pp, tolerance {:.2}pp, {}",
                f.corollary,
                f.measured_gap,
                f.tolerance,
                verdict_word(f.verdict)
            )
        })
        .collect();
    let verdict_path = out.join(VERDICTS_FILE);
    write_json(
        &verdict_path,
        &VerdictFile {
            schema: SCHEMA_VERSION,
            report: path.display().to_string(),
            findings,
        },
    )?;
    rec.output(verdict_path);
    rec.finish(cfg.seed, cfg)?;
    Ok(Outcome::ok(lines.join("\n")))
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Violated => "violated",
    }
}

pub fn fixtures(cfg: &RunConfig, dir: Option<&Path>) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    ensure_dir(out)?;
    let mut rec = Recorder::new(out, "fixtures");
    let report = match dir {
        Some(d) => {
            rec.input(d.join(vgr_core::vgr::OOD_FIXTURE_FILE));
            rec.input(d.join(vgr_core::vgr::AUG_FIXTURE_FILE));
            run_fixtures_in(d)?
        }
        None => run_fixtures()?,
    };
    let mut lines = Vec::new();
    for row in &report.rows {
        let gaps: Vec<String> = row
            .findings
            .iter()
            .map(|f| {
                format!(
                    "{} {:.2} {}",
                    f.corollary,
                    f.measured_gap,
                    verdict_word(f.verdict)
                )
            })
            .collect();
        lines.push(format!(
            "{} {:<32} {}",
            if row.matches { "ok  " } else { "FAIL" },
            row.label,
            gaps.join(", ")
        ));
    }
    lines.extend(
        report
            .transcription_problems
            .iter()
            .map(|p| format!("FAIL {p}")),
    );
    let path = out.join(FIXTURE_VERDICTS_FILE);
    write_json(&path, &report)?;
    rec.output(path);
    rec.finish(cfg.seed, cfg)?;
    if report.all_match() {
        lines.push("all paper verdicts reproduced".into());
        Ok(Outcome::ok(lines.join("\n")))
    } else {
        lines.push(format!(
            "{} fixture rows disagree with the published verdicts",
            report.mismatches().count()
        ));
        Ok(Outcome {
            message: lines.join("\n"),
            exit_code: 1,
        })
    }
}

pub fn reproduce(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out;
    ensure_dir(out)?;
    let mut rec = Recorder::new(out, "reproduce");
    let outcome = run_experiment(&cfg.experiment())?;
    let report = &outcome.report;
    let json_path = out.join(REPRODUCE_JSON);
    let md_path = out.join(REPRODUCE_MD);
    let csv_path = out.join(FIG3_CSV);
    write_json(&json_path, report)?;
    let md = report.to_markdown();
    fs::write(&md_path, &md).map_err(|e| CliError::io(&md_path, e))?;
    fs::write(&csv_path, report.fig3_csv()).map_err(|e| CliError::io(&csv_path, e))?;
    for p in [json_path, md_path, csv_path] {
        rec.output(p);
    }
    rec.finish(cfg.seed, cfg)?;
    Ok(Outcome::ok(md))
}
