use serde::{Deserialize, Serialize};

use super::keywords::DrawnKeywords;
use super::{LlmRequest, PromptError};
use crate::model::{Answer, Dimension, ElementKey};

/// Element-splitting instruction; `{prompt}` is substituted.
pub const ELEMENT_SPLIT_TEMPLATE: &str = r#"Given an aigc prompt, extract the elements that are important for generating images.
Classify each element into a type (object, human, animal, food, activity, attribute, counting, color, material, spatial, location, shape, other).
Examples are as follows, where Elements is in json format.

Prompt:A man posing for a selfie in a jacket and bow tie.
Elements:["man (human)", "selfie (activity)", "jacket (object)", "bow tie (object)", "posing (activity)"]

Prompt:A horse and several cows feed on hay.
Elements:["horse (animal)", "cows (animal)", "hay (object)", "feed on (activity)", "several (counting)"]

...

Prompt: {prompt}
Elements:"#;

/// Question-generation instruction; `{caption}` and `{element}` are substituted.
pub const QUESTION_TEMPLATE: &str = r#"Given a prompt for image generation and one of its related elements, generate one easy Yes/No question to verify whether the element is represented in the image generated by the prompt.

Description: A man posing for a selfie in a jacket and bow tie.
Element: man (human):
Q: Is this a man?
Choices: yes, no
A: yes

Description: Several Face mask and 0 nun
Element: 0 (Counting):
Q: Are there any nuns in the photo?
Choices: yes, no
A: no

...

Description: {caption}
Element: {element}:"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthCategory {
    ColorMaterial,
    LocationWeatherTime,
    ActivityPerspective,
    SpatialComposition,
}

impl SynthCategory {
    pub const ALL: [SynthCategory; 4] = [
        SynthCategory::ColorMaterial,
        SynthCategory::LocationWeatherTime,
        SynthCategory::ActivityPerspective,
        SynthCategory::SpatialComposition,
    ];
}

fn slot_list<'a>(values: &'a [String], name: &'static str) -> Result<&'a [String], PromptError> {
    if values.is_empty() || values.iter().any(|v| v.trim().is_empty()) {
        Err(PromptError::MissingSlot(name))
    } else {
        Ok(values)
    }
}

fn slot<'a>(value: &'a Option<String>, name: &'static str) -> Result<&'a str, PromptError> {
    match value.as_deref() {
        Some(v) if !v.trim().is_empty() => Ok(v),
        _ => Err(PromptError::MissingSlot(name)),
    }
}

pub fn build_synth_request(
    category: SynthCategory,
    k: &DrawnKeywords,
) -> Result<LlmRequest, PromptError> {
    let text = match category {
        SynthCategory::ColorMaterial => format!(
            "Generate a natural and reasonable prompt following the format [color] [adj-material][noun] and [color][adj-material][noun], given noun {} and color {}.",
            slot_list(&k.nouns, "nouns")?.join(", "),
            slot_list(&k.colors, "colors")?.join(", "),
        ),
        SynthCategory::LocationWeatherTime => format!(
            "Generate a prompt following the format A/an [noun][adp] [location], [style], [weather], [time], given noun {}, location {} and style {}.",
            slot_list(&k.nouns, "nouns")?.join(", "),
            slot(&k.location, "location")?,
            slot(&k.style, "style")?,
        ),
        SynthCategory::ActivityPerspective => format!(
            "Generate a natural and reasonable prompt following the format [nounA] [verb][nounB], given nounA {}.",
            slot_list(&k.nouns, "nouns")?.join(", "),
        ),
        SynthCategory::SpatialComposition => format!(
            "Generate a natural and reasonable prompt following the format [nounA] [position] [noun B] and the [noun A] [adj] the [noun B], given noun {}. [position] denotes the positional relationship between objects and [adj] denotes the contrasting relationship between objects.",
            slot_list(&k.nouns, "nouns")?.join(", "),
        ),
    };
    LlmRequest::new(text)
}

/// Appends the perspective keyword to a generated activity phrase.
pub fn finish_activity_prompt(generated: &str, perspective: &str) -> String {
    let phrase = generated
        .trim()
        .trim_matches('"')
        .trim_end_matches('.')
        .trim();
    format!("{phrase}, {perspective}")
}

pub fn build_element_split_request(prompt: &str) -> Result<LlmRequest, PromptError> {
    if prompt.trim().is_empty() {
        return Err(PromptError::EmptyPrompt);
    }
    LlmRequest::new(ELEMENT_SPLIT_TEMPLATE.replace("{prompt}", prompt))
}

pub fn build_question_request(
    prompt: &str,
    element: &ElementKey,
) -> Result<LlmRequest, PromptError> {
    if prompt.trim().is_empty() {
        return Err(PromptError::EmptyPrompt);
    }
    LlmRequest::new(
        QUESTION_TEMPLATE
            .replace("{caption}", prompt)
            .replace("{element}", &element.to_string()),
    )
}

/// Asks for every applicable category of each dimension as a JSON object.
pub fn build_category_request(
    prompt: &str,
    dimensions: &[Dimension],
) -> Result<LlmRequest, PromptError> {
    if prompt.trim().is_empty() {
        return Err(PromptError::EmptyPrompt);
    }
    let mut text = String::from(
        "Given an aigc prompt, label it in each dimension below. Choose every category that applies, using only the listed names.\nAnswer in json format as {\"dimension\": [\"category\", ...]}.\n\n",
    );
    for d in dimensions {
        text.push_str(&format!("{}: {}\n", d.name, d.categories.join(", ")));
    }
    text.push_str(&format!("\nPrompt: {prompt}\nCategories:"));
    LlmRequest::new(text)
}

/// Positive and negative PN questions. The positive one substitutes the
/// correct answer, the negative one its opposite.
pub fn render_pn_questions(
    prompt: &str,
    question: &str,
    correct: Answer,
    with_prompt: bool,
) -> (String, String) {
    let render = |a: Answer| {
        let body = format!("Is the answer to {question} in this image {a}?");
        if with_prompt {
            format!("This image is generated from {prompt}. {body}")
        } else {
            body
        }
    };
    (render(correct), render(correct.opposite()))
}
