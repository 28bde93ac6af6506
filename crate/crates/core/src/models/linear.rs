use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Question;
use crate::error::{Error, Result};
use crate::features::ImageFeatures;
use crate::models::{AnswerVocab, Answerer};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Lower-cased alphanumeric tokens of a question text.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Binary bag-of-words vocabulary built from training question texts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct BowVocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl BowVocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let words: BTreeSet<String> = texts.into_iter().flat_map(tokenize).collect();
        Self::from(words.into_iter().collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Writes 1 for every known token of `text` into `out[..len()]`.
    fn encode_into<T: Scalar>(&self, text: &str, out: &mut [T]) {
        for token in tokenize(text) {
            if let Some(&i) = self.index.get(&token) {
                out[i] = T::one();
            }
        }
    }
}

impl From<Vec<String>> for BowVocab {
    fn from(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        BowVocab { words, index }
    }
}

impl From<BowVocab> for Vec<String> {
    fn from(v: BowVocab) -> Self {
        v.words
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearHyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Weights start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        LinearHyper {
            lr: 0.5,
            epochs: 30,
            batch_size: 32,
            init_scale: 0.01,
            seed: 0,
        }
    }
}

impl LinearHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "lr must be finite and >= 0, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParams("batch_size must be positive".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidParams(
                "init_scale must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Softmax-linear classifier over `[mean-pooled object features ⊕ question BoW]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    pub vocab: AnswerVocab,
    pub bow: BowVocab,
    pub feature_dim: usize,
    /// Row-major `vocab.len() × input_dim()`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub hyper: LinearHyper,
    /// Full-data mean loss after every epoch.
    pub loss_history: Vec<f64>,
}

impl<T: Scalar> LinearModel<T> {
    /// Untrained model with seeded uniform weights and zero bias.
    pub fn init(vocab: AnswerVocab, bow: BowVocab, feature_dim: usize, hyper: LinearHyper) -> Self {
        let input_dim = feature_dim + bow.len();
        let mut rng = seeded(hyper.seed);
        let scale = hyper.init_scale;
        let weights = (0..vocab.len() * input_dim)
            .map(|_| {
                if scale > 0.0 {
                    T::lit(rng.gen_range(-scale..=scale))
                } else {
                    T::zero()
                }
            })
            .collect();
        let bias = vec![T::zero(); vocab.len()];
        LinearModel {
            vocab,
            bow,
            feature_dim,
            weights,
            bias,
            hyper,
            loss_history: Vec::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.feature_dim + self.bow.len()
    }

    /// Model input for one question: mean over object vectors, then BoW.
    pub fn encode(&self, question: &Question, features: &ImageFeatures<T>) -> Result<Vec<T>> {
        let mut x = vec![T::zero(); self.input_dim()];
        if features.is_empty() {
            return Err(Error::InvalidParams(format!(
                "no object features for question `{}`",
                question.question_id
            )));
        }
        let mut flat = Vec::with_capacity(self.feature_dim);
        for vector in features.vectors.values() {
            flat.clear();
            vector.write_flat(&mut flat);
            if flat.len() != self.feature_dim {
                return Err(Error::InvalidParams(format!(
                    "feature length {} does not match model dimension {}",
                    flat.len(),
                    self.feature_dim
                )));
            }
            for (acc, v) in x.iter_mut().zip(&flat) {
                *acc = *acc + *v;
            }
        }
        let n = T::from_usize(features.len()).expect("object count fits scalar");
        x[..self.feature_dim].iter_mut().for_each(|v| *v = *v / n);
        self.bow
            .encode_into(&question.text, &mut x[self.feature_dim..]);
        Ok(x)
    }

    pub fn logits(&self, x: &[T]) -> Vec<T> {
        let d = self.input_dim();
        self.weights
            .chunks_exact(d)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, v)| acc + *w * *v))
            .collect()
    }

    /// Index of the largest logit; the lowest index wins ties.
    pub fn predict_index(&self, x: &[T]) -> usize {
        argmax_index(&self.logits(x))
    }

    /// Mean cross-entropy over the batch and its gradient with respect to
    /// the weights and the bias.
    pub fn loss_and_gradient(&self, inputs: &[Vec<T>], labels: &[usize]) -> (T, Vec<T>, Vec<T>) {
        self.batch_gradient(
            inputs.iter().map(Vec::as_slice).zip(labels.iter().copied()),
            inputs.len(),
        )
    }

    fn batch_gradient<'a>(
        &self,
        batch: impl Iterator<Item = (&'a [T], usize)>,
        size: usize,
    ) -> (T, Vec<T>, Vec<T>) {
        let d = self.input_dim();
        let mut grad_w = vec![T::zero(); self.weights.len()];
        let mut grad_b = vec![T::zero(); self.bias.len()];
        let mut loss = T::zero();
        let n = T::from_usize(size.max(1)).expect("batch size fits scalar");
        for (x, y) in batch {
            let p = softmax(&self.logits(x));
            loss = loss - p[y].max(T::min_positive_value()).ln();
            for (k, pk) in p.iter().enumerate() {
                let delta = if k == y { *pk - T::one() } else { *pk } / n;
                grad_b[k] = grad_b[k] + delta;
                for (g, v) in grad_w[k * d..(k + 1) * d].iter_mut().zip(x) {
                    *g = *g + delta * *v;
                }
            }
        }
        (loss / n, grad_w, grad_b)
    }

    pub fn mean_loss(&self, inputs: &[Vec<T>], labels: &[usize]) -> T {
        let n = T::from_usize(inputs.len().max(1)).expect("count fits scalar");
        inputs
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                -softmax(&self.logits(x))[y]
                    .max(T::min_positive_value())
                    .ln()
            })
            .sum::<T>()
            / n
    }

    /// Mini-batch gradient descent on pre-encoded inputs. Batch order is a
    /// seeded shuffle per epoch.
    pub fn fit_encoded(&mut self, inputs: &[Vec<T>], labels: &[usize]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        self.hyper.validate()?;
        let lr = T::lit(self.hyper.lr);
        let mut rng = seeded(crate::rng::derive_seed(self.hyper.seed, "linear-batches"));
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        for _ in 0..self.hyper.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(self.hyper.batch_size) {
                let items = batch.iter().map(|&i| (inputs[i].as_slice(), labels[i]));
                let (_, gw, gb) = self.batch_gradient(items, batch.len());
                for (w, g) in self.weights.iter_mut().zip(&gw) {
                    *w = *w - lr * *g;
                }
                for (b, g) in self.bias.iter_mut().zip(&gb) {
                    *b = *b - lr * *g;
                }
            }
            self.loss_history
                .push(self.mean_loss(inputs, labels).to_f64_lossy());
        }
        Ok(())
    }
}

impl<T: Scalar> Answerer<T> for LinearModel<T> {
    fn predict(&self, question: &Question, features: &ImageFeatures<T>) -> Result<String> {
        let x = self.encode(question, features)?;
        Ok(self.vocab.word(self.predict_index(&x)).to_string())
    }
}

pub(crate) fn argmax_index<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = z.iter().map(|v| (*v - max).exp()).collect();
    let total: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Trains a linear model on `(question, features)` pairs. Answers outside
/// `vocab` are an error.
pub fn train_linear<T: Scalar>(
    data: &[(&Question, &ImageFeatures<T>)],
    vocab: AnswerVocab,
    hyper: &LinearHyper,
) -> Result<LinearModel<T>> {
    let Some((_, first)) = data.first() else {
        return Err(Error::EmptyTrainingSet);
    };
    let feature_dim = first
        .vectors
        .values()
        .next()
        .map(|v| v.len())
        .ok_or_else(|| Error::InvalidParams("training image without objects".into()))?;
    let bow = BowVocab::build(data.iter().map(|(q, _)| q.text.as_str()));
    let mut model = LinearModel::init(vocab, bow, feature_dim, hyper.clone());
    let mut inputs = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for (q, f) in data {
        inputs.push(model.encode(q, f)?);
        labels.push(model.vocab.index_of(&q.answer).ok_or_else(|| {
            Error::InvalidParams(format!("answer `{}` missing from the vocabulary", q.answer))
        })?);
    }
    model.fit_encoded(&inputs, &labels)?;
    Ok(model)
}
