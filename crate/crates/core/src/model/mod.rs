//! Domain types and JSONL persistence for prompts, image pairs, annotations
//! and predictions.

mod jsonl;
mod types;
mod vocab;

pub use jsonl::{
    parse_jsonl, parse_records, to_jsonl_string, write_jsonl, DataError, FieldMapping, JsonlRecord,
    Records, Schema,
};
pub use types::{
    cluster_category, default_dimensions, validate_pair_refs, validate_prompt_corpus,
    AnnotationRecord, Dimension, FieldError, ImagePair, Origin, PredictionRecord, Prompt,
    MAX_ANNOTATORS, MIN_ANNOTATORS,
};
pub use vocab::{
    Answer, ElementCategory, ElementKey, ElementKeyError, NotAnAnswer, StructureLabel,
    UnknownCategory,
};
