//! Corpus engineering, rule-based rephrasing and evaluation for counselling
//! response types derived from the MITI behavioural code.
//!
//! The crate is organised along the pipeline:
//!
//! * [`corpus`]: shared domain types, on-disk formats and splitting.
//! * [`text`]: tokenization, n-gram mining, style phrases, inflection, tagging.
//! * [`embedding`]: externally produced vectors and exact cosine retrieval.
//! * [`weak_label`]: n-gram and retrieval weak labeling, union/intersection merge.
//! * [`classifier`]: 15-way multinomial logistic regression over hashed n-grams.
//! * [`pp`]: pseudo-parallel pair construction and prompt formatting.
//! * [`eval`]: the automatic metric battery and corpus reports.
//! * [`agreement`]: rating batches, weighted kappa and score aggregation.

pub mod agreement;
pub mod classifier;
pub mod corpus;
pub mod embedding;
mod error;
pub mod eval;
pub mod pp;
pub mod rng;
pub mod text;
pub mod weak_label;

pub use corpus::{LabeledSentence, MitiLabel, PseudoPair, RatingRecord};
pub use error::{Error, Result};
