//! Synthetic corpus generation and OOD split construction.

mod augment;
mod generate;
mod split;

pub use augment::{
    augment, build_aug_split, AugOutcome, AugParams, AugRecord, AugSample, AugSplit, AugStats,
    SkipReason,
};
pub use generate::{generate_corpus, GenParams, IntRange};
pub(crate) use split::argmax;
pub use split::{
    changing_priors_split, frequency_split, frequency_split_full, scene_holdout_split,
    total_variation, CpParams, FreqParams, SplitOutcome, TypeStat,
};
