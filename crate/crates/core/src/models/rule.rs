use crate::data::{check_program, Ontology, ProgramStep, Question, UNKNOWN_ANSWER};
use crate::error::{Error, Result};
use crate::features::{normalized, EmbeddingTable, FeatureVector, ImageFeatures};
use crate::models::Answerer;
use crate::scalar::{cosine, dot, norm, Scalar};

pub const DEFAULT_TAU: f64 = 0.7;

/// Nearest-word lookup by cosine similarity over a fixed word list.
#[derive(Clone, Debug)]
pub struct Decoder<T> {
    words: Vec<String>,
    units: Vec<Vec<T>>,
}

impl<T: Scalar> Decoder<T> {
    pub fn new<'a>(
        words: impl IntoIterator<Item = &'a str>,
        table: &EmbeddingTable<T>,
    ) -> Result<Self> {
        let mut words: Vec<String> = words.into_iter().map(str::to_string).collect();
        words.sort();
        words.dedup();
        if words.is_empty() {
            return Err(Error::EmptyVocab);
        }
        let units = words.iter().map(|w| normalized(&table.embed(w))).collect();
        Ok(Decoder { words, units })
    }

    /// Highest-cosine word; ties go to the lexicographically smallest word
    /// and the zero vector decodes to `unknown`.
    pub fn decode(&self, vector: &[T]) -> &str {
        if norm(vector) == T::zero() {
            return UNKNOWN_ANSWER;
        }
        let mut best = 0;
        let mut best_score = dot(vector, &self.units[0]);
        for (i, u) in self.units.iter().enumerate().skip(1) {
            let score = dot(vector, u);
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        &self.words[best]
    }
}

pub fn decode_name<'a, T: Scalar>(
    vector: &[T],
    vocab: impl IntoIterator<Item = &'a str>,
    table: &EmbeddingTable<T>,
) -> Result<String> {
    Ok(Decoder::new(vocab, table)?.decode(vector).to_string())
}

/// How much of the attribute-slot mass points at `v`: `(s·v)/(s·s)`. For a
/// slot that is the mean of k orthonormal attribute vectors this is 1 for
/// each member and 0 otherwise, where plain cosine would fall to 1/√k.
pub(crate) fn attribute_affinity<T: Scalar>(slot: &[T], v: &[T]) -> T {
    let ss = dot(slot, slot);
    if ss == T::zero() {
        T::zero()
    } else {
        dot(slot, v) / ss
    }
}

/// Executes gold programs over feature vectors.
#[derive(Clone, Debug)]
pub struct RuleModel<T> {
    table: EmbeddingTable<T>,
    ontology: Ontology,
    tau: T,
    names: Decoder<T>,
    attributes: Decoder<T>,
}

impl<T: Scalar> RuleModel<T> {
    pub fn new(table: EmbeddingTable<T>, ontology: Ontology, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && (0.0..=1.0).contains(&tau)) {
            return Err(Error::InvalidParams(format!(
                "tau must lie in [0, 1], got {tau}"
            )));
        }
        let names = Decoder::new(ontology.names(), &table)?;
        let attributes = Decoder::new(
            ontology.attribute_vocab().iter().map(String::as_str),
            &table,
        )?;
        Ok(RuleModel {
            table,
            ontology,
            tau: T::lit(tau),
            names,
            attributes,
        })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn execute(&self, program: &[ProgramStep], features: &ImageFeatures<T>) -> Result<String> {
        check_program(program)?;
        let mut survivors: Vec<(&FeatureVector<T>, T)> =
            features.vectors.values().map(|v| (v, T::zero())).collect();
        for step in program {
            match step {
                ProgramStep::Select { target } => {
                    let names = self.ontology.select_names(target).ok_or_else(|| {
                        Error::MalformedProgram(format!("unknown select target `{target}`"))
                    })?;
                    let embeddings: Vec<Vec<T>> =
                        names.iter().map(|n| self.table.embed(n)).collect();
                    survivors = survivors
                        .into_iter()
                        .filter_map(|(v, _)| {
                            let score = embeddings
                                .iter()
                                .map(|e| cosine(&v.name_slot, e))
                                .fold(T::neg_infinity(), T::max);
                            (score >= self.tau).then_some((v, score))
                        })
                        .collect();
                }
                ProgramStep::Filter { attribute } => {
                    if !self.ontology.is_attribute(attribute) {
                        return Err(Error::MalformedProgram(format!(
                            "unknown attribute `{attribute}`"
                        )));
                    }
                    let e = self.table.embed(attribute);
                    survivors.retain(|(v, _)| attribute_affinity(&v.attr_slot, &e) >= self.tau);
                }
                ProgramStep::Relate { relation } => {
                    return Err(Error::MalformedProgram(format!(
                        "relate `{relation}` is not executable"
                    )));
                }
                ProgramStep::QueryName | ProgramStep::QueryAttribute => {
                    let mut best: Option<(&FeatureVector<T>, T)> = None;
                    for &(v, score) in &survivors {
                        if best.is_none_or(|(_, s)| score > s) {
                            best = Some((v, score));
                        }
                    }
                    let Some((v, _)) = best else {
                        return Ok(UNKNOWN_ANSWER.to_string());
                    };
                    let decoded = if matches!(step, ProgramStep::QueryName) {
                        self.names.decode(&v.name_slot)
                    } else {
                        self.attributes.decode(&v.attr_slot)
                    };
                    return Ok(decoded.to_string());
                }
            }
        }
        unreachable!("check_program guarantees a final query step")
    }
}

impl<T: Scalar> Answerer<T> for RuleModel<T> {
    fn predict(&self, question: &Question, features: &ImageFeatures<T>) -> Result<String> {
        self.execute(&question.program, features)
    }
}
