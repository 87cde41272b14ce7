//! Evaluation and data tooling for sentence conciseness rewriting.
//!
//! - [`tokenize`]: rule tokenizer and syllable heuristic
//! - [`align`]: token alignment and edit-span extraction
//! - [`score`]: multi-reference edit-span F-beta and annotator agreement
//! - [`datagen`]: round-trip and multi-reference training pairs, candidate filtering
//! - [`metrics`]: compression, readability, IDF density, synonym substitutions
//! - [`cli`]: the `concise` command line

pub mod align;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod io;
pub mod metrics;
pub mod parallel;
pub mod score;
pub mod tokenize;

pub use align::{align, extract_edits, Alignment, EditSet, EditSpan, MergeMode};
pub use datagen::{FilterRules, SentencePair};
pub use error::{Error, Result};
pub use metrics::{DfTable, MetricsReport, SynonymLexicon};
pub use score::{AgreementGrid, MultiRefExample, ScoreReport};
pub use tokenize::{tokenize, TokenSequence};

/// Version of the edit JSONL, DF table and report formats written by this crate.
pub const FORMAT_VERSION: u32 = 1;
