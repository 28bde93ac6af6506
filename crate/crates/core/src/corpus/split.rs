use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Ontology, Question, Split};
use crate::error::{Error, Result};

/// Total-variation distance between two answer histograms.
pub fn total_variation(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> f64 {
    let na: usize = a.values().sum();
    let nb: usize = b.values().sum();
    if na == 0 || nb == 0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let pa = *a.get(k).unwrap_or(&0) as f64 / na as f64;
            let pb = *b.get(k).unwrap_or(&0) as f64 / nb as f64;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

fn histogram<'a>(questions: impl IntoIterator<Item = &'a Question>) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for q in questions {
        *h.entry(q.answer.clone()).or_insert(0) += 1;
    }
    h
}

/// Most frequent answer, lexicographically smallest on ties.
pub(crate) fn argmax(h: &BTreeMap<String, usize>) -> Option<&str> {
    let mut best: Option<(&str, usize)> = None;
    for (answer, &count) in h {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((answer, count));
        }
    }
    best.map(|(a, _)| a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpParams {
    /// Target share of each question type placed on the test side.
    pub test_fraction: f64,
    /// Fraction of every answer bucket copied to the opposite side.
    pub spill: f64,
    /// Minimum per-type TV distance; types falling short are re-split without spill.
    pub min_tv: f64,
    pub dev_fraction: f64,
    pub id_fraction: f64,
}

impl Default for CpParams {
    fn default() -> Self {
        CpParams {
            test_fraction: 0.3,
            spill: 0.1,
            min_tv: 0.5,
            dev_fraction: 0.1,
            id_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeStat {
    pub type_key: String,
    pub n_train: usize,
    pub n_test: usize,
    pub tv: f64,
    pub train_argmax: String,
    pub test_argmax: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: Split,
    pub warnings: Vec<String>,
    pub type_stats: Vec<TypeStat>,
}

fn group_by_type<'a>(
    questions: &'a [Question],
    ontology: &Ontology,
) -> BTreeMap<String, Vec<&'a Question>> {
    let mut groups: BTreeMap<String, Vec<&Question>> = BTreeMap::new();
    for q in questions {
        groups.entry(q.type_key(ontology)).or_default().push(q);
    }
    groups
}

/// Restores input order inside every split part.
fn ordered(ids: Vec<String>, order: &HashMap<&str, usize>) -> Vec<String> {
    let mut ids = ids;
    ids.sort_by_key(|id| order[id.as_str()]);
    ids
}

fn fraction_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).round() as usize
}

/// Changing-Priors split: per question type, whole answer buckets are assigned
/// greedily (largest first) to the side with the larger remaining deficit, then
/// a `spill` share of every bucket is moved across. Dev and ID-test are carved
/// from the train side, stratified per answer.
pub fn changing_priors_split<R: Rng + ?Sized>(
    questions: &[Question],
    ontology: &Ontology,
    params: &CpParams,
    rng: &mut R,
) -> Result<SplitOutcome> {
    for (label, v) in [
        ("test_fraction", params.test_fraction),
        ("spill", params.spill),
        ("dev_fraction", params.dev_fraction),
        ("id_fraction", params.id_fraction),
    ] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidParams(format!(
                "{label} = {v} outside [0, 1)"
            )));
        }
    }
    if params.dev_fraction + params.id_fraction >= 1.0 {
        return Err(Error::InvalidParams(
            "dev + id fractions leave no train data".into(),
        ));
    }
    let order: HashMap<&str, usize> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| (q.question_id.as_str(), i))
        .collect();
    let mut split = Split {
        name: "changing_priors".into(),
        ..Split::default()
    };
    let mut warnings = Vec::new();
    let mut type_stats = Vec::new();

    for (type_key, group) in group_by_type(questions, ontology) {
        let mut buckets: BTreeMap<&str, Vec<&Question>> = BTreeMap::new();
        for q in &group {
            buckets.entry(q.answer.as_str()).or_default().push(q);
        }
        if buckets.len() < 2 {
            warnings.push(format!(
                "type `{type_key}` has a single answer; {} questions excluded",
                group.len()
            ));
            continue;
        }
        let mut buckets: Vec<(&str, Vec<&Question>)> = buckets.into_iter().collect();
        buckets.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        for (_, bucket) in &mut buckets {
            bucket.shuffle(rng);
        }

        let total = group.len() as f64;
        let (mut train_n, mut test_n) = (0usize, 0usize);
        let mut to_test: Vec<bool> = Vec::with_capacity(buckets.len());
        for (_, bucket) in &buckets {
            let train_deficit = (1.0 - params.test_fraction) * total - train_n as f64;
            let test_deficit = params.test_fraction * total - test_n as f64;
            let test = test_deficit > train_deficit;
            if test {
                test_n += bucket.len();
            } else {
                train_n += bucket.len();
            }
            to_test.push(test);
        }
        if !to_test.iter().any(|&t| t) {
            *to_test.last_mut().expect("≥ 2 buckets") = true;
        }

        let assign = |spill: f64| {
            let (mut train, mut test): (Vec<&Question>, Vec<&Question>) = (Vec::new(), Vec::new());
            for ((_, bucket), &is_test) in buckets.iter().zip(&to_test) {
                let moved = fraction_count(bucket.len(), spill).min(bucket.len().saturating_sub(1));
                let (stay, cross) = bucket.split_at(bucket.len() - moved);
                let (home, away) = if is_test {
                    (&mut test, &mut train)
                } else {
                    (&mut train, &mut test)
                };
                home.extend_from_slice(stay);
                away.extend_from_slice(cross);
            }
            (train, test)
        };
        let acceptable = |train: &[&Question], test: &[&Question]| {
            let (ht, hs) = (
                histogram(train.iter().copied()),
                histogram(test.iter().copied()),
            );
            total_variation(&ht, &hs) >= params.min_tv && argmax(&ht) != argmax(&hs)
        };
        let (mut train, mut test) = assign(params.spill);
        if !acceptable(&train, &test) {
            (train, test) = assign(0.0);
        }

        let (ht, hs) = (
            histogram(train.iter().copied()),
            histogram(test.iter().copied()),
        );

        // stratified carve of dev and ID-test from the train side
        let mut per_answer: BTreeMap<&str, Vec<&Question>> = BTreeMap::new();
        for q in &train {
            per_answer.entry(q.answer.as_str()).or_default().push(q);
        }
        let mut kept_train = 0;
        for (_, qs) in per_answer {
            let n_dev = fraction_count(qs.len(), params.dev_fraction);
            let n_id = fraction_count(qs.len(), params.id_fraction).min(qs.len() - n_dev);
            for (i, q) in qs.into_iter().enumerate() {
                let id = q.question_id.clone();
                if i < n_dev {
                    split.dev.push(id);
                } else if i < n_dev + n_id {
                    split.id_test.push(id);
                } else {
                    split.train.push(id);
                    kept_train += 1;
                }
            }
        }
        split
            .ood_test
            .extend(test.iter().map(|q| q.question_id.clone()));
        type_stats.push(TypeStat {
            type_key,
            n_train: kept_train,
            n_test: test.len(),
            tv: total_variation(&ht, &hs),
            train_argmax: argmax(&ht).unwrap_or_default().to_string(),
            test_argmax: argmax(&hs).unwrap_or_default().to_string(),
        });
    }

    split.train = ordered(split.train, &order);
    split.dev = ordered(split.dev, &order);
    split.id_test = ordered(split.id_test, &order);
    split.ood_test = ordered(split.ood_test, &order);
    Ok(SplitOutcome {
        split,
        warnings,
        type_stats,
    })
}

/// Answer-frequency split of an evaluation pool.
///
/// Per question type, answers are grouped by frequency and the rarest groups
/// are moved to OOD while their cumulative share stays within `alpha`. Equal
/// frequencies never straddle the boundary.
pub fn frequency_split(
    questions: &[Question],
    ontology: &Ontology,
    alpha: f64,
) -> Result<(Vec<String>, Vec<String>)> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} outside [0, 1)"
        )));
    }
    let mut tail_answers: HashMap<String, Vec<String>> = HashMap::new();
    for (type_key, group) in group_by_type(questions, ontology) {
        let h = histogram(group.iter().copied());
        let total = group.len() as f64;
        let mut by_count: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (answer, count) in h {
            by_count.entry(count).or_default().push(answer);
        }
        let mut cumulative = 0.0;
        let mut tail = Vec::new();
        for (count, answers) in by_count {
            let mass = (count * answers.len()) as f64 / total;
            if cumulative + mass > alpha + 1e-12 {
                break;
            }
            cumulative += mass;
            tail.extend(answers);
        }
        tail_answers.insert(type_key, tail);
    }
    let mut id = Vec::new();
    let mut ood = Vec::new();
    for q in questions {
        let tail = &tail_answers[&q.type_key(ontology)];
        if tail.contains(&q.answer) {
            ood.push(q.question_id.clone());
        } else {
            id.push(q.question_id.clone());
        }
    }
    Ok((id, ood))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqParams {
    pub alpha: f64,
    pub train_fraction: f64,
    pub dev_fraction: f64,
}

impl Default for FreqParams {
    fn default() -> Self {
        FreqParams {
            alpha: 0.2,
            train_fraction: 0.7,
            dev_fraction: 0.1,
        }
    }
}

/// Random train/dev/pool partition followed by [`frequency_split`] of the pool.
pub fn frequency_split_full<R: Rng + ?Sized>(
    questions: &[Question],
    ontology: &Ontology,
    params: &FreqParams,
    rng: &mut R,
) -> Result<SplitOutcome> {
    if params.train_fraction + params.dev_fraction >= 1.0 {
        return Err(Error::InvalidParams("no evaluation pool left".into()));
    }
    let order: HashMap<&str, usize> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| (q.question_id.as_str(), i))
        .collect();
    let mut shuffled: Vec<&Question> = questions.iter().collect();
    shuffled.shuffle(rng);
    let n_train = fraction_count(questions.len(), params.train_fraction);
    let n_dev = fraction_count(questions.len(), params.dev_fraction).min(questions.len() - n_train);
    let pool: Vec<Question> = shuffled[n_train + n_dev..]
        .iter()
        .map(|q| (*q).clone())
        .collect();
    let (id_test, ood_test) = frequency_split(&pool, ontology, params.alpha)?;
    let ids = |qs: &[&Question]| qs.iter().map(|q| q.question_id.clone()).collect::<Vec<_>>();
    let split = Split {
        name: "frequency".into(),
        train: ordered(ids(&shuffled[..n_train]), &order),
        dev: ordered(ids(&shuffled[n_train..n_train + n_dev]), &order),
        id_test: ordered(id_test, &order),
        ood_test: ordered(ood_test, &order),
    };
    Ok(SplitOutcome {
        split,
        warnings: Vec::new(),
        type_stats: Vec::new(),
    })
}

/// Image-level holdout: questions on held-out images form the ID-test pool
/// (the source of augmentation splits); dev is carved from training images.
pub fn scene_holdout_split<R: Rng + ?Sized>(
    questions: &[Question],
    test_fraction: f64,
    dev_fraction: f64,
    rng: &mut R,
) -> Result<Split> {
    if !(0.0..1.0).contains(&test_fraction) || !(0.0..1.0).contains(&dev_fraction) {
        return Err(Error::InvalidParams("fractions must lie in [0, 1)".into()));
    }
    let mut images: Vec<&str> = questions.iter().map(|q| q.image_id.as_str()).collect();
    images.sort_unstable();
    images.dedup();
    images.shuffle(rng);
    let n_test = fraction_count(images.len(), test_fraction);
    let n_dev = fraction_count(images.len(), dev_fraction).min(images.len() - n_test);
    let side: HashMap<&str, u8> = images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            (
                *img,
                if i < n_test {
                    2
                } else if i < n_test + n_dev {
                    1
                } else {
                    0
                },
            )
        })
        .collect();
    let mut split = Split {
        name: "scene_holdout".into(),
        ..Split::default()
    };
    for q in questions {
        let id = q.question_id.clone();
        match side[q.image_id.as_str()] {
            2 => split.id_test.push(id),
            1 => split.dev.push(id),
            _ => split.train.push(id),
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::name_question;
    use crate::rng::seeded;
    use std::collections::BTreeSet;

    fn pool(spec: &[(&str, &str, usize)]) -> Vec<Question> {
        let mut out = Vec::new();
        for (target, answer, count) in spec {
            for _ in 0..*count {
                let id = format!("q{:04}", out.len());
                out.push(name_question(&id, "img", target, None, answer, &["o0"]));
            }
        }
        out
    }

    fn lookup(qs: &[Question]) -> HashMap<&str, &Question> {
        qs.iter().map(|q| (q.question_id.as_str(), q)).collect()
    }

    fn hist_of(ids: &[String], index: &HashMap<&str, &Question>) -> BTreeMap<String, usize> {
        histogram(ids.iter().map(|id| index[id.as_str()]))
    }

    /// Independent oracle: best TV achievable by assigning whole buckets.
    fn brute_force_best_tv(counts: &[usize]) -> f64 {
        let n = counts.len();
        let mut best: f64 = 0.0;
        for mask in 1..(1u32 << n) - 1 {
            let mut a = BTreeMap::new();
            let mut b = BTreeMap::new();
            for (i, &c) in counts.iter().enumerate() {
                let side = if mask & (1 << i) != 0 { &mut a } else { &mut b };
                side.insert(format!("x{i}"), c);
            }
            best = best.max(total_variation(&a, &b));
        }
        best
    }

    #[test]
    fn two_balanced_answers_disalign() {
        assert_eq!(brute_force_best_tv(&[50, 50]), 1.0);
        let qs = pool(&[("animal", "cat", 50), ("animal", "dog", 50)]);
        let out = changing_priors_split(
            &qs,
            &Ontology::builtin(),
            &CpParams::default(),
            &mut seeded(0),
        )
        .unwrap();
        let index = lookup(&qs);
        let train_side: Vec<String> = out
            .split
            .train
            .iter()
            .chain(&out.split.dev)
            .chain(&out.split.id_test)
            .cloned()
            .collect();
        let ht = hist_of(&train_side, &index);
        let hs = hist_of(&out.split.ood_test, &index);
        assert!(total_variation(&ht, &hs) >= 0.5);
        assert_eq!(argmax(&ht), Some("cat"));
        assert_eq!(argmax(&hs), Some("dog"));
        // 45 cat + 5 dog on the train side, 45 dog + 5 cat on the test side
        assert_eq!(ht["cat"], 45);
        assert_eq!(hs["dog"], 45);
        assert!((out.type_stats[0].tv - 0.8).abs() < 1e-12);
    }

    #[test]
    fn single_answer_type_is_excluded_with_warning() {
        let qs = pool(&[("animal", "cat", 20)]);
        let out = changing_priors_split(
            &qs,
            &Ontology::builtin(),
            &CpParams::default(),
            &mut seeded(0),
        )
        .unwrap();
        assert!(out.split.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn partition_covers_input_minus_exclusions() {
        let qs = pool(&[
            ("animal", "cat", 30),
            ("animal", "dog", 12),
            ("animal", "bird", 7),
            ("vehicle", "car", 45),
            ("vehicle", "bus", 4),
            ("food", "pizza", 9),
        ]);
        let out = changing_priors_split(
            &qs,
            &Ontology::builtin(),
            &CpParams::default(),
            &mut seeded(3),
        )
        .unwrap();
        assert!(out.split.overlaps().is_empty());
        let got: BTreeSet<&String> = out
            .split
            .train
            .iter()
            .chain(&out.split.dev)
            .chain(&out.split.id_test)
            .chain(&out.split.ood_test)
            .collect();
        let expected: BTreeSet<&String> = qs
            .iter()
            .filter(|q| q.answer != "pizza")
            .map(|q| &q.question_id)
            .collect();
        assert_eq!(got, expected);
        for stat in &out.type_stats {
            assert!(stat.tv >= 0.5, "{stat:?}");
            assert_ne!(stat.train_argmax, stat.test_argmax);
        }
        // skewed 45/4 type falls back to whole-bucket assignment
        let vehicle = out
            .type_stats
            .iter()
            .find(|s| s.type_key == "name/vehicle")
            .unwrap();
        assert_eq!(vehicle.tv, 1.0);
    }

    #[test]
    fn frequency_tail_goes_ood() {
        let qs = pool(&[
            ("animal", "cat", 70),
            ("animal", "dog", 20),
            ("animal", "bird", 10),
        ]);
        let (id, ood) = frequency_split(&qs, &Ontology::builtin(), 0.2).unwrap();
        let index = lookup(&qs);
        assert!(ood.iter().all(|q| index[q.as_str()].answer == "bird"));
        assert_eq!(ood.len(), 10);
        assert_eq!(id.len(), 90);
    }

    #[test]
    fn frequency_single_answer_is_all_id() {
        let qs = pool(&[("animal", "cat", 15)]);
        let (id, ood) = frequency_split(&qs, &Ontology::builtin(), 0.2).unwrap();
        assert_eq!(id.len(), 15);
        assert!(ood.is_empty());
    }

    #[test]
    fn frequency_ties_never_straddle() {
        // three answers at 10% each: taking all would exceed alpha, so none go
        let qs = pool(&[
            ("animal", "cat", 70),
            ("animal", "dog", 10),
            ("animal", "bird", 10),
            ("animal", "cow", 10),
        ]);
        let (_, ood) = frequency_split(&qs, &Ontology::builtin(), 0.2).unwrap();
        assert!(ood.is_empty());
    }

    #[test]
    fn holdout_keeps_images_together() {
        let mut qs = Vec::new();
        for img in 0..20 {
            for k in 0..3 {
                let mut q = name_question(
                    &format!("i{img}-{k}"),
                    &format!("i{img}"),
                    "animal",
                    None,
                    "cat",
                    &["o0"],
                );
                q.image_id = format!("i{img}");
                qs.push(q);
            }
        }
        let split = scene_holdout_split(&qs, 0.25, 0.1, &mut seeded(1)).unwrap();
        assert!(split.overlaps().is_empty());
        assert_eq!(split.len(), 60);
        assert_eq!(split.id_test.len(), 15);
        let index = lookup(&qs);
        let test_imgs: BTreeSet<&str> = split
            .id_test
            .iter()
            .map(|id| index[id.as_str()].image_id.as_str())
            .collect();
        assert!(split
            .train
            .iter()
            .all(|id| !test_imgs.contains(index[id.as_str()].image_id.as_str())));
    }
}
