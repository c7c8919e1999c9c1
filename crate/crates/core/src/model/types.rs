use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::vocab::{ElementKey, StructureLabel};

/// A violated record invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("field `{field}`: {message}")]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Synthetic,
}

/// A text prompt with its multi-label category memberships.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub prompt_id: String,
    pub text: String,
    pub origin: Origin,
    /// Dimension name to the set of categories the prompt belongs to.
    #[serde(default)]
    pub categories: BTreeMap<String, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meaningless_flag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePair {
    pub pair_id: String,
    pub prompt_id: String,
    pub model_name: String,
    pub image_uri: String,
}

pub const MIN_ANNOTATORS: usize = 3;
pub const MAX_ANNOTATORS: usize = 6;

fn default_true() -> bool {
    true
}

/// Per-annotator labels for one image-text pair.
///
/// Vote lists are aligned with `alignment_scores`: position `i` holds the
/// vote of annotator `i`, or `null` when that annotator skipped the element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub alignment_scores: Vec<u8>,
    #[serde(default)]
    pub element_votes: BTreeMap<ElementKey, Vec<Option<u8>>>,
    #[serde(default)]
    pub structure_labels: BTreeSet<StructureLabel>,
    #[serde(default = "default_true")]
    pub split_confidence: bool,
    #[serde(default)]
    pub nsfw_discard: bool,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), FieldError> {
        let n = self.alignment_scores.len();
        if !(MIN_ANNOTATORS..=MAX_ANNOTATORS).contains(&n) {
            return Err(FieldError::new(
                "alignment_scores",
                format!("expected {MIN_ANNOTATORS} to {MAX_ANNOTATORS} scores, got {n}"),
            ));
        }
        if let Some(bad) = self.alignment_scores.iter().find(|s| !(1..=5).contains(*s)) {
            return Err(FieldError::new(
                "alignment_scores",
                format!("score {bad} outside the 1..=5 Likert range"),
            ));
        }
        for (key, votes) in &self.element_votes {
            let field = format!("element_votes.{key}");
            if votes.len() != n {
                return Err(FieldError::new(
                    field,
                    format!("{} votes for {n} annotators", votes.len()),
                ));
            }
            if let Some(bad) = votes.iter().flatten().find(|v| **v > 1) {
                return Err(FieldError::new(field, format!("vote {bad} is not 0 or 1")));
            }
        }
        Ok(())
    }
}

/// Model output for one pair: overall score and per-element scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub overall_score: f64,
    #[serde(default)]
    pub element_scores: BTreeMap<ElementKey, f64>,
    pub source: String,
}

impl PredictionRecord {
    /// Rejects non-finite values and clamps element scores into [0, 1].
    pub fn sanitize(&mut self) -> Result<(), FieldError> {
        if !self.overall_score.is_finite() {
            return Err(FieldError::new("overall_score", "not a finite number"));
        }
        for (key, score) in self.element_scores.iter_mut() {
            if !score.is_finite() {
                return Err(FieldError::new(
                    format!("element_scores.{key}"),
                    "not a finite number",
                ));
            }
            *score = score.clamp(0.0, 1.0);
        }
        Ok(())
    }
}

/// A labeling dimension and its closed category list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub categories: Vec<String>,
}

impl Dimension {
    pub fn new(name: &str, categories: &[&str]) -> Self {
        Dimension {
            name: name.to_string(),
            categories: categories.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// The four prompt labeling dimensions: subject, logical relationship,
/// image style, and the seven embedding clusters.
pub fn default_dimensions() -> Vec<Dimension> {
    vec![
        Dimension::new(
            "subject",
            &[
                "Artifacts",
                "World Knowledge",
                "People",
                "Outdoor Scenes",
                "Illustrations",
                "Vehicles",
                "Food & Beverage",
                "Arts",
                "Abstract",
                "Produce & Plants",
                "Indoor Scenes",
                "Animals",
                "Idioms",
            ],
        ),
        Dimension::new(
            "logic",
            &[
                "Position Relationship",
                "Number",
                "Color",
                "Writing & Symbols",
                "Perspective",
                "Anti-reality",
            ],
        ),
        Dimension::new(
            "style",
            &[
                "Material",
                "Genre",
                "Design",
                "Photography & Cinema",
                "Artist & Works",
            ],
        ),
        Dimension {
            name: "semantic".to_string(),
            categories: (0..7).map(cluster_category).collect(),
        },
    ]
}

/// Category name used for embedding cluster `index`.
pub fn cluster_category(index: usize) -> String {
    format!("cluster_{index}")
}

/// Checks prompt-id uniqueness and that every category is declared.
///
/// Dimensions a prompt mentions but `dimensions` does not declare are errors.
pub fn validate_prompt_corpus(
    prompts: &[Prompt],
    dimensions: &[Dimension],
) -> Result<(), FieldError> {
    let mut seen = BTreeSet::new();
    for prompt in prompts {
        if !seen.insert(prompt.prompt_id.as_str()) {
            return Err(FieldError::new(
                "prompt_id",
                format!("duplicate prompt id `{}`", prompt.prompt_id),
            ));
        }
        for (dim_name, cats) in &prompt.categories {
            let dim = dimensions
                .iter()
                .find(|d| &d.name == dim_name)
                .ok_or_else(|| {
                    FieldError::new(
                        format!("categories.{dim_name}"),
                        format!("undeclared dimension in prompt `{}`", prompt.prompt_id),
                    )
                })?;
            if let Some(bad) = cats.iter().find(|c| !dim.categories.contains(c)) {
                return Err(FieldError::new(
                    format!("categories.{dim_name}"),
                    format!(
                        "category `{bad}` of prompt `{}` is not in the dimension's list",
                        prompt.prompt_id
                    ),
                ));
            }
        }
    }
    Ok(())
}

/// Checks that every pair refers to a known prompt.
pub fn validate_pair_refs(pairs: &[ImagePair], prompts: &[Prompt]) -> Result<(), FieldError> {
    let ids: BTreeSet<&str> = prompts.iter().map(|p| p.prompt_id.as_str()).collect();
    match pairs.iter().find(|p| !ids.contains(p.prompt_id.as_str())) {
        Some(pair) => Err(FieldError::new(
            "prompt_id",
            format!(
                "pair `{}` refers to unknown prompt `{}`",
                pair.pair_id, pair.prompt_id
            ),
        )),
        None => Ok(()),
    }
}
