//! Trait-span question answering datasets and SQuAD 2.0 scoring.
//!
//! The pipeline reads a JSONL comment corpus ([`corpus`]), finds sentences
//! similar to labeled BIG5 trait reference sentences ([`matcher`]), turns
//! them into SQuAD v2.0 questions with a controlled share of unanswerable
//! ones ([`dataset`]), and scores model predictions ([`eval`]).

pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod matcher;
pub mod pipeline;

pub use error::{Error, Result};
