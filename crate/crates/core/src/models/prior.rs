use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::argmax;
use crate::data::{Ontology, Question, UNKNOWN_ANSWER};
use crate::error::Result;
use crate::features::ImageFeatures;
use crate::models::Answerer;
use crate::scalar::Scalar;

/// Answers with the most frequent training answer of the question type and
/// never looks at the image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorModel {
    ontology: Ontology,
    histograms: BTreeMap<String, BTreeMap<String, usize>>,
}

impl PriorModel {
    pub fn fit<'a>(train: impl IntoIterator<Item = &'a Question>, ontology: &Ontology) -> Self {
        let mut histograms: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for q in train {
            *histograms
                .entry(q.type_key(ontology))
                .or_default()
                .entry(q.answer.clone())
                .or_insert(0) += 1;
        }
        PriorModel {
            ontology: ontology.clone(),
            histograms,
        }
    }

    pub fn histograms(&self) -> &BTreeMap<String, BTreeMap<String, usize>> {
        &self.histograms
    }

    pub fn train_count(&self) -> usize {
        self.histograms.values().flat_map(|h| h.values()).sum()
    }

    fn global(&self) -> BTreeMap<String, usize> {
        let mut all = BTreeMap::new();
        for (answer, n) in self.histograms.values().flatten() {
            *all.entry(answer.clone()).or_insert(0) += n;
        }
        all
    }

    pub fn predict_question(&self, question: &Question) -> String {
        let key = question.type_key(&self.ontology);
        if let Some(answer) = self.histograms.get(&key).and_then(argmax) {
            return answer.to_string();
        }
        argmax(&self.global()).unwrap_or(UNKNOWN_ANSWER).to_string()
    }
}

impl<T: Scalar> Answerer<T> for PriorModel {
    fn predict(&self, question: &Question, _features: &ImageFeatures<T>) -> Result<String> {
        Ok(self.predict_question(question))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;
    use crate::data::ProgramStep;

    fn repeat(answer: &str, n: usize, target: &str) -> Vec<Question> {
        (0..n)
            .map(|i| {
                name_question(
                    &format!("{answer}{i}"),
                    "img0",
                    target,
                    None,
                    answer,
                    &["o00"],
                )
            })
            .collect()
    }

    #[test]
    fn argmax_per_type_and_global_fallback() {
        let o = Ontology::builtin();
        let mut train = repeat("cat", 90, "animal");
        train.extend(repeat("dog", 10, "animal"));
        train.extend(repeat("cup", 5, "kitchenware"));
        let m = PriorModel::fit(&train, &o);
        assert_eq!(m.train_count(), 105);
        let q = name_question("x", "img0", "animal", None, "dog", &["o00"]);
        assert_eq!(m.predict_question(&q), "cat");
        let mut unseen = q.clone();
        unseen.program = vec![
            ProgramStep::Select {
                target: "vehicle".into(),
            },
            ProgramStep::QueryName,
        ];
        assert_eq!(m.predict_question(&unseen), "cat");
    }

    #[test]
    fn ties_go_to_the_smaller_word() {
        let o = Ontology::builtin();
        let mut train = repeat("dog", 3, "animal");
        train.extend(repeat("cat", 3, "animal"));
        let m = PriorModel::fit(&train, &o);
        assert_eq!(m.predict_question(&train[0]), "cat");
    }

    #[test]
    fn empty_model_says_unknown() {
        let m = PriorModel::fit(&[], &Ontology::builtin());
        let q = name_question("x", "img0", "animal", None, "dog", &["o00"]);
        assert_eq!(m.predict_question(&q), UNKNOWN_ANSWER);
    }
}
