//! Toolkit for building and evaluating text-to-image alignment benchmarks.
//!
//! - [`model`]: records and JSONL persistence
//! - [`shaping`]: balanced prompt selection by mixed-integer programming
//! - [`cluster`]: k-means categorization of prompt embeddings
//! - [`prompts`]: synthetic prompts, LLM request templates and response parsing
//! - [`annotation`]: label aggregation, re-annotation rule, per-prompt spread
//! - [`vqa`]: VQA-probability scoring and score fusion
//! - [`metrics`]: correlations and threshold searches
//! - [`report`]: per-model leaderboards

pub mod annotation;
pub mod cluster;
pub mod metrics;
pub mod model;
pub mod prompts;
pub mod report;
pub mod shaping;
pub mod vqa;
