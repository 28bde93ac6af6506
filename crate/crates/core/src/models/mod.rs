//! Reference answerers from pure shortcut (prior) to grounded (rule).

mod checkpoint;
mod linear;
mod prior;
mod rule;
mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use linear::{train_linear, BowVocab, LinearHyper, LinearModel};
pub use prior::PriorModel;
pub use rule::{decode_name, Decoder, RuleModel, DEFAULT_TAU};
pub use vocab::AnswerVocab;

use crate::data::Question;
use crate::error::Result;
use crate::features::ImageFeatures;
use crate::scalar::Scalar;

/// Anything that maps a question and an image representation to an answer.
pub trait Answerer<T: Scalar>: Sync {
    fn predict(&self, question: &Question, features: &ImageFeatures<T>) -> Result<String>;
}
