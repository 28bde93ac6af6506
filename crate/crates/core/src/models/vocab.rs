use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{Ontology, Question};
use crate::error::{Error, Result};

/// Ordered answer list; the position of a word is its class index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct AnswerVocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl AnswerVocab {
    /// Rejects duplicates and empty lists.
    pub fn new(words: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyVocab);
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "answer",
                    id: w.clone(),
                });
            }
        }
        Ok(AnswerVocab { words, index })
    }

    /// Sorted union of the training answers, every ontology name and every
    /// attribute word, so that edited answers are representable.
    pub fn build<'a>(
        train: impl IntoIterator<Item = &'a Question>,
        ontology: &Ontology,
    ) -> Result<Self> {
        let mut words: BTreeSet<String> = train.into_iter().map(|q| q.answer.clone()).collect();
        words.extend(ontology.names().map(str::to_string));
        words.extend(ontology.attribute_vocab().iter().cloned());
        Self::new(words.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

impl TryFrom<Vec<String>> for AnswerVocab {
    type Error = Error;

    fn try_from(words: Vec<String>) -> Result<Self> {
        Self::new(words)
    }
}

impl From<AnswerVocab> for Vec<String> {
    fn from(v: AnswerVocab) -> Self {
        v.words
    }
}
