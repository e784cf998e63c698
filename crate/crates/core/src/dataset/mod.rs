//! SQuAD v2.0 dataset construction.

mod builder;
mod config;
mod squad;

pub use builder::{
    apply_unanswerable_ratio, build_negative_entry, build_positive_entries, emit_split,
    expand_train_entries, format_question, matched_traits, negative_rng, replacement_count,
    CommentEntries, TrainCandidate,
};
pub use config::{BuildConfig, NegativePolicy, Split, DEFAULT_TEMPLATE, TRAIT_PLACEHOLDER};
pub use squad::{
    Answer, Article, DatasetCounts, Paragraph, QAEntry, Qa, SquadDataset, SQUAD_VERSION,
};
