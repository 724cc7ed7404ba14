//! Corpus engineering for the ShARC rule-interpretation conversational QA task.
//!
//! The crate is organised around the pipeline it supports:
//!
//! * [`corpus`]: ingestion, validation, tokenization and the 4-way class label.
//! * [`ruleparse`]: splitting a markdown rule snippet into clauses and guessing
//!   whether they combine conjunctively or disjunctively.
//! * [`probe`]: dataset-side statistics for the shortcut patterns (last
//!   follow-up answer echo, empty context for irrelevant questions, turn length).
//! * [`augment`]: seeded regeneration of the augmented corpus.
//! * [`markers`]: LCS alignment and per-token history/scenario/span labels.
//! * [`baseline`]: the deterministic clue-exploiting policy and its tuner.
//! * [`eval`]: confusion matrix, micro/macro accuracy, BLEU and the combined score.
//! * [`report`]: side-by-side rendering of probe and evaluation artifacts.

pub mod augment;
pub mod baseline;
pub mod corpus;
pub mod digest;
mod error;
pub mod eval;
#[cfg(test)]
mod fixtures;
pub mod markers;
pub mod probe;
pub mod report;
pub mod ruleparse;

pub use corpus::{
    derive_label, load_corpus, tokenize, Answer, ClassLabel, Corpus, DialogTurn, Instance,
    Strictness, Token, TokenizedText,
};
pub use error::{Error, Result};
