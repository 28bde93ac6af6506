use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    eligible_for_fpvg, execute_symbolic, Corpus, Ontology, ProgramStep, Provenance, Question,
    QuestionType, SceneGraph, SceneObject, MAX_ATTRIBUTES, MAX_OBJECTS,
};
use crate::error::{Error, Result};
use crate::rng::{keyed, seeded};

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub min: usize,
    pub max: usize,
}

impl IntRange {
    pub const fn new(min: usize, max: usize) -> Self {
        IntRange { min, max }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.min..=self.max)
    }

    fn check(&self, label: &str) -> Result<()> {
        if self.min > self.max {
            return Err(Error::InvalidParams(format!(
                "{label}: empty range {}..={}",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub n_scenes: usize,
    pub objects_per_scene: IntRange,
    pub attrs_per_object: IntRange,
    pub questions_per_scene: IntRange,
    /// Number of distinct categories placed in one scene.
    pub categories_per_scene: IntRange,
    /// Zipf exponent of the per-category name prior (0 = uniform).
    pub answer_skew: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_scenes: 200,
            objects_per_scene: IntRange::new(6, 14),
            attrs_per_object: IntRange::new(0, 2),
            questions_per_scene: IntRange::new(8, 12),
            categories_per_scene: IntRange::new(2, 4),
            answer_skew: 1.0,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        self.objects_per_scene.check("objects_per_scene")?;
        self.attrs_per_object.check("attrs_per_object")?;
        self.questions_per_scene.check("questions_per_scene")?;
        self.categories_per_scene.check("categories_per_scene")?;
        if self.objects_per_scene.max > MAX_OBJECTS {
            return Err(Error::InvalidParams(format!(
                "objects_per_scene exceeds {MAX_OBJECTS}"
            )));
        }
        if self.objects_per_scene.min < 2 || self.categories_per_scene.min < 2 {
            return Err(Error::InvalidParams(
                "scenes need at least two objects of two categories".into(),
            ));
        }
        if self.attrs_per_object.max > MAX_ATTRIBUTES {
            return Err(Error::InvalidParams(format!(
                "attrs_per_object exceeds {MAX_ATTRIBUTES}"
            )));
        }
        if self.questions_per_scene.min == 0 {
            return Err(Error::InvalidParams(
                "questions_per_scene must be positive".into(),
            ));
        }
        if !(self.answer_skew.is_finite() && self.answer_skew >= 0.0) {
            return Err(Error::InvalidParams(
                "answer_skew must be finite and ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

/// Name prior of one category: a seeded ranking with Zipf weights.
struct NamePrior {
    names: Vec<String>,
    weights: WeightedIndex<f64>,
}

fn name_priors(ontology: &Ontology, params: &GenParams) -> BTreeMap<String, NamePrior> {
    ontology
        .categories()
        .iter()
        .map(|(category, members)| {
            let mut names: Vec<String> = members.iter().cloned().collect();
            names.shuffle(&mut keyed(params.seed, &format!("prior/{category}")));
            let weights = (0..names.len())
                .map(|rank| 1.0 / ((rank + 1) as f64).powf(params.answer_skew))
                .collect::<Vec<_>>();
            let weights = WeightedIndex::new(weights).expect("positive weights");
            (category.clone(), NamePrior { names, weights })
        })
        .collect()
}

fn random_box<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    let x1 = rng.gen_range(0..=800u32);
    let y1 = rng.gen_range(0..=800u32);
    let x2 = rng.gen_range(x1 + 50..=1000);
    let y2 = rng.gen_range(y1 + 50..=1000);
    [x1, y1, x2, y2].map(|v| f64::from(v) / 1000.0)
}

fn random_scene<R: Rng + ?Sized>(
    image_id: &str,
    ontology: &Ontology,
    priors: &BTreeMap<String, NamePrior>,
    params: &GenParams,
    rng: &mut R,
) -> SceneGraph {
    let categories: Vec<&String> = ontology.categories().keys().collect();
    let attributes: Vec<&String> = ontology.attribute_vocab().iter().collect();
    let n_objects = params.objects_per_scene.sample(rng);
    let n_categories = params
        .categories_per_scene
        .sample(rng)
        .min(n_objects)
        .min(categories.len());
    let chosen: Vec<&String> = categories
        .choose_multiple(rng, n_categories)
        .copied()
        .collect();
    let mut assignment: Vec<&String> = chosen.clone();
    while assignment.len() < n_objects {
        assignment.push(chosen.choose(rng).expect("at least one category"));
    }
    assignment.shuffle(rng);
    let objects = assignment
        .into_iter()
        .enumerate()
        .map(|(index, category)| {
            let prior = &priors[category.as_str()];
            let name = prior.names[prior.weights.sample(rng)].clone();
            let n_attrs = params.attrs_per_object.sample(rng).min(attributes.len());
            let attributes = attributes
                .choose_multiple(rng, n_attrs)
                .map(|a| (*a).clone())
                .collect();
            SceneObject {
                object_id: format!("o{index:02}"),
                name,
                attributes,
                bbox: random_box(rng),
            }
        })
        .collect();
    SceneGraph {
        image_id: image_id.to_string(),
        objects,
    }
}

/// Every answerable and FPVG-eligible query question about a scene.
fn candidate_questions(scene: &SceneGraph, ontology: &Ontology) -> Vec<(Vec<ProgramStep>, String)> {
    let mut programs: Vec<(Vec<ProgramStep>, String)> = Vec::new();
    let mut present: BTreeMap<&str, Vec<&SceneObject>> = BTreeMap::new();
    for object in &scene.objects {
        if let Some(category) = ontology.category_of(&object.name) {
            present.entry(category).or_default().push(object);
        }
    }
    for (category, objects) in &present {
        let select = ProgramStep::Select {
            target: category.to_string(),
        };
        programs.push((
            vec![select.clone(), ProgramStep::QueryName],
            format!("What {category} is in the image?"),
        ));
        let mut attributes: Vec<&str> = objects
            .iter()
            .flat_map(|o| o.attributes.iter().map(String::as_str))
            .collect();
        attributes.sort_unstable();
        attributes.dedup();
        for attribute in attributes {
            programs.push((
                vec![
                    select.clone(),
                    ProgramStep::Filter {
                        attribute: attribute.to_string(),
                    },
                    ProgramStep::QueryName,
                ],
                format!("What {category} is {attribute}?"),
            ));
        }
    }
    let mut names: Vec<&str> = scene.objects.iter().map(|o| o.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    for name in names {
        programs.push((
            vec![
                ProgramStep::Select {
                    target: name.to_string(),
                },
                ProgramStep::QueryAttribute,
            ],
            format!("What is the {name} like?"),
        ));
    }
    programs.retain(|(program, _)| {
        execute_symbolic(program, scene, ontology)
            .map(|outcome| {
                outcome.answer.is_some()
                    && !outcome.selected.is_empty()
                    && outcome.selected.len() < scene.objects.len()
            })
            .unwrap_or(false)
    });
    programs
}

/// Generates a deterministic synthetic corpus.
///
/// Each question's relevant objects are the objects its `select` step
/// matches, and its answer is the symbolic execution result on the scene.
pub fn generate_corpus(ontology: &Ontology, params: &GenParams) -> Result<Corpus> {
    params.validate()?;
    if let Some(problem) = ontology.violations().into_iter().next() {
        return Err(Error::Ontology(problem));
    }
    let priors = name_priors(ontology, params);
    let mut rng = seeded(params.seed);
    let mut scenes = Vec::with_capacity(params.n_scenes);
    let mut questions = Vec::new();
    for index in 0..params.n_scenes {
        let image_id = format!("img{index:05}");
        let (scene, candidates) = (0..1000)
            .find_map(|_| {
                let scene = random_scene(&image_id, ontology, &priors, params, &mut rng);
                let candidates = candidate_questions(&scene, ontology);
                (!candidates.is_empty()).then_some((scene, candidates))
            })
            .ok_or_else(|| Error::InvalidParams("cannot generate answerable scenes".into()))?;
        let wanted = params
            .questions_per_scene
            .sample(&mut rng)
            .min(candidates.len());
        let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), wanted).into_vec();
        picked.sort_unstable();
        for (q_index, candidate) in picked.into_iter().enumerate() {
            let (program, text) = candidates[candidate].clone();
            let outcome = execute_symbolic(&program, &scene, ontology)?;
            let question = Question {
                question_id: format!("{image_id}-q{q_index:02}"),
                image_id: image_id.clone(),
                text,
                qtype: QuestionType::Query,
                program,
                answer: outcome.answer.expect("candidates are answerable"),
                relevant_ids: outcome.selected,
                provenance: Provenance::Original,
            };
            debug_assert!(eligible_for_fpvg(&question, &scene));
            questions.push(question);
        }
        scenes.push(scene);
    }
    Ok(Corpus {
        ontology: ontology.clone(),
        scenes,
        questions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_corpus;
    use std::collections::{BTreeSet, HashMap};

    fn small(seed: u64) -> GenParams {
        GenParams {
            n_scenes: 30,
            seed,
            ..GenParams::default()
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let o = Ontology::builtin();
        assert_eq!(
            generate_corpus(&o, &small(5)).unwrap(),
            generate_corpus(&o, &small(5)).unwrap()
        );
        assert_ne!(
            generate_corpus(&o, &small(5)).unwrap(),
            generate_corpus(&o, &small(6)).unwrap()
        );
    }

    #[test]
    fn generated_corpus_validates_and_every_scene_is_covered() {
        let o = Ontology::builtin();
        let corpus = generate_corpus(&o, &small(1)).unwrap();
        let report = validate_corpus(&corpus.scenes, &corpus.questions, &o);
        assert!(report.is_ok(), "{:?}", report.violations);
        let covered: BTreeSet<&str> = corpus
            .questions
            .iter()
            .map(|q| q.image_id.as_str())
            .collect();
        assert_eq!(covered.len(), corpus.scenes.len());
        let scenes: HashMap<&str, &SceneGraph> = corpus
            .scenes
            .iter()
            .map(|s| (s.image_id.as_str(), s))
            .collect();
        for q in &corpus.questions {
            let scene = scenes[q.image_id.as_str()];
            assert!(eligible_for_fpvg(q, scene));
            let outcome = execute_symbolic(&q.program, scene, &o).unwrap();
            assert_eq!(outcome.answer.as_deref(), Some(q.answer.as_str()));
            assert_eq!(outcome.selected, q.relevant_ids);
        }
    }

    #[test]
    fn question_count_tracks_range_expectation() {
        // 200 scenes × E[U{8..12}] = 2000 when candidates do not run out.
        let o = Ontology::builtin();
        let corpus = generate_corpus(&o, &GenParams::default()).unwrap();
        let n = corpus.questions.len();
        assert!((1700..=2100).contains(&n), "{n} questions");
    }

    #[test]
    fn single_name_category_is_rejected() {
        let mut categories = o_categories();
        categories.insert("lonely".into(), BTreeSet::from(["unicorn".to_string()]));
        let o = Ontology::new(categories, BTreeSet::from(["red".to_string()])).unwrap();
        assert!(matches!(
            generate_corpus(&o, &small(0)),
            Err(Error::Ontology(_))
        ));
    }

    fn o_categories() -> std::collections::BTreeMap<String, BTreeSet<String>> {
        Ontology::builtin().categories().clone()
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        let o = Ontology::builtin();
        let mut p = small(0);
        p.objects_per_scene = IntRange::new(5, 101);
        assert!(generate_corpus(&o, &p).is_err());
        p.objects_per_scene = IntRange::new(9, 4);
        assert!(generate_corpus(&o, &p).is_err());
    }
}
