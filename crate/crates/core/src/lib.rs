//! Building blocks for detecting machine-rephrased sentences.
//!
//! The crate covers the whole experimental loop:
//!
//! * [`corpus`]: ingestion, length rules, length buckets, normalization and
//!   pair-aware stratified splits.
//! * [`rephrase`]: obtaining the machine half of each pair from a
//!   chat-completion endpoint (or an offline mock), with checkpointed resume.
//! * [`features`]: TF-IDF sparse vectors over a training-fitted vocabulary.
//! * [`svm`]: an RBF-kernel soft-margin SVM trained with SMO.
//! * [`eval`]: AUC-ROC and F1, in aggregate and per length bucket, for the
//!   built-in SVM or for externally produced score files.

pub mod corpus;
mod seed;
pub mod error;
pub mod eval;
pub mod features;
pub mod rephrase;
pub mod svm;

pub use corpus::{Bucket, BucketSpec, Corpus, Label, Source, SplitSet, TextRecord};
pub use eval::{RangeReport, ScoredRecord};
pub use features::{SparseVector, Vocabulary};
pub use svm::{SvmConfig, SvmModel};
pub use error::{Error, Result};
