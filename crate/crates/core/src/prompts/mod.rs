//! Synthetic prompt generation, LLM request templates and response parsing.
//!
//! Count and writing prompts are rendered directly from keyword draws. The
//! other synthetic categories, element splitting, question generation and
//! category labeling go through an external chat-completion endpoint behind
//! [`LlmClient`], which retries, caches responses on disk and bounds the
//! number of requests in flight.

mod client;
mod keywords;
mod parse;
mod templates;

use serde::{Deserialize, Serialize};

pub use client::{
    ClientConfig, HttpTransport, LlmClient, LlmError, Regenerated, ResponseCache, Transport,
    TransportError, DEFAULT_MAX_IN_FLIGHT, DEFAULT_RETRIES, ENDPOINT_ENV, MAX_REGENERATIONS,
    TOKEN_ENV,
};
pub use keywords::{
    draw_synth_keywords, gen_count_prompt, gen_writing_prompt, pluralize, render_count_prompt,
    render_writing_prompt, DrawnKeywords, KeywordCorpus, ObjectClass, QUANTITIES,
};
pub use parse::{
    parse_category_response, parse_element_response, parse_question_response, ElementList,
    GeneratedQuestion,
};
pub use templates::{
    build_category_request, build_element_split_request, build_question_request,
    build_synth_request, finish_activity_prompt, render_pn_questions, SynthCategory,
    ELEMENT_SPLIT_TEMPLATE, QUESTION_TEMPLATE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("keyword list `{0}` is empty")]
    EmptyList(&'static str),
    #[error("missing keyword slot `{0}`")]
    MissingSlot(&'static str),
    #[error("prompt text is empty")]
    EmptyPrompt,
    #[error("response is not a JSON array: {0}")]
    NotJson(String),
    #[error("bad element `{item}`: {reason}")]
    BadElement { item: String, reason: String },
    #[error("response lacks a `{0}` line")]
    MissingLine(&'static str),
    #[error("answer `{0}` is not yes or no")]
    BadAnswer(String),
    #[error("choices `{0}` are not yes/no")]
    BadChoices(String),
    #[error("unknown {dimension} category `{category}`")]
    UnknownLabel { dimension: String, category: String },
}

/// Sampling parameters forwarded to the endpoint when set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub instruction: String,
    #[serde(default)]
    pub params: DecodingParams,
    /// Regeneration counter; part of the cache key, never sent.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub attempt: u32,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl LlmRequest {
    pub fn new(instruction: impl Into<String>) -> Result<Self, PromptError> {
        let instruction = instruction.into();
        if instruction.trim().is_empty() {
            return Err(PromptError::EmptyPrompt);
        }
        Ok(LlmRequest {
            model: None,
            instruction,
            params: DecodingParams::default(),
            attempt: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub status: u16,
}
