//! Core of the focalization annotation toolkit.
//!
//! Everything here is pure computation over in-memory data: labels and
//! annotation records, paragraph segmentation, n-gram baselines, agreement
//! and accuracy metrics, hypothesis tests, corpus analytics and prompt
//! rendering. The crate is `no_std` and only needs `alloc`; file formats,
//! HTTP and the command line live in the `focalize` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytics;
pub mod annotation;
pub mod baseline;
pub mod corpus;
pub mod label;
pub mod metrics;
pub mod prompt;
pub mod text;

pub use annotation::{AnnotationRecord, DatasetError, GoldDataset};
pub use corpus::{Document, Excerpt};
pub use label::{majority_label, parse_label, Consensus, FocalizationLabel, CLASSES};
pub use prompt::{build_prompt, confidence_from_logprob, PromptId, PromptTemplate};
