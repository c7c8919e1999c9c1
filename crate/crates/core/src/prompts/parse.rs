use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::model::{Answer, Dimension, ElementKey, ElementKeyError, JsonlRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementList {
    pub prompt_id: String,
    pub elements: Vec<ElementKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub element: ElementKey,
    pub question: String,
    pub choices: Vec<String>,
    pub answer: Answer,
}

/// The outermost `open..=close` span of `text`.
fn json_span(text: &str, open: char, close: char) -> Option<&str> {
    let start = text.find(open)?;
    let end = text.rfind(close)?;
    (end > start).then(|| &text[start..=end])
}

/// Parses a `["name (category)", ...]` array, tolerating text around it.
pub fn parse_element_response(text: &str) -> Result<Vec<ElementKey>, PromptError> {
    let span =
        json_span(text, '[', ']').ok_or_else(|| PromptError::NotJson(text.trim().to_string()))?;
    let items: Vec<String> =
        serde_json::from_str(span).map_err(|e| PromptError::NotJson(e.to_string()))?;
    items
        .into_iter()
        .map(|item| {
            item.parse::<ElementKey>()
                .map_err(|e| PromptError::BadElement {
                    reason: match &e {
                        ElementKeyError::Category(c) => c.to_string(),
                        ElementKeyError::Malformed(_) => "not of the form `name (category)`".into(),
                    },
                    item,
                })
        })
        .collect()
}

fn field<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    let rest = line.trim().strip_prefix(name)?;
    Some(rest.strip_prefix(':')?.trim())
}

/// Reads the first `Q:` / `Choices:` / `A:` block. A missing `Choices:` line
/// defaults to yes/no.
pub fn parse_question_response(
    text: &str,
    element: &ElementKey,
) -> Result<GeneratedQuestion, PromptError> {
    let mut question = None;
    let mut choices = None;
    let mut answer = None;
    for line in text.lines() {
        if question.is_none() {
            if let Some(q) = field(line, "Q") {
                question = Some(q.to_string());
            }
            continue;
        }
        if let Some(c) = field(line, "Choices") {
            choices.get_or_insert_with(|| c.to_string());
        } else if let Some(a) = field(line, "A") {
            answer = Some(a.to_string());
            break;
        }
    }
    let question = question
        .filter(|q| !q.is_empty())
        .ok_or(PromptError::MissingLine("Q"))?;
    let answer = answer.ok_or(PromptError::MissingLine("A"))?;
    let answer: Answer = answer
        .parse()
        .map_err(|_| PromptError::BadAnswer(answer.clone()))?;

    let choices: Vec<String> = match choices {
        None => vec!["yes".into(), "no".into()],
        Some(raw) => {
            let parsed: Vec<String> = raw
                .split(',')
                .map(|c| c.trim().trim_end_matches('.').to_ascii_lowercase())
                .filter(|c| !c.is_empty())
                .collect();
            let set: BTreeSet<&str> = parsed.iter().map(String::as_str).collect();
            if set != BTreeSet::from(["no", "yes"]) {
                return Err(PromptError::BadChoices(raw));
            }
            vec!["yes".into(), "no".into()]
        }
    };
    Ok(GeneratedQuestion {
        element: element.clone(),
        question,
        choices,
        answer,
    })
}

/// Parses a `{"dimension": ["category", ...]}` object, checking every name
/// against `dimensions`. Dimensions absent from the reply map to empty sets.
pub fn parse_category_response(
    text: &str,
    dimensions: &[Dimension],
) -> Result<BTreeMap<String, BTreeSet<String>>, PromptError> {
    let span =
        json_span(text, '{', '}').ok_or_else(|| PromptError::NotJson(text.trim().to_string()))?;
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(span).map_err(|e| PromptError::NotJson(e.to_string()))?;
    let mut out: BTreeMap<String, BTreeSet<String>> = dimensions
        .iter()
        .map(|d| (d.name.clone(), BTreeSet::new()))
        .collect();
    for (dim, cats) in raw {
        let decl = dimensions
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(&dim))
            .ok_or_else(|| PromptError::UnknownLabel {
                dimension: "dimension".into(),
                category: dim.clone(),
            })?;
        for cat in cats {
            let known = decl
                .categories
                .iter()
                .find(|c| c.eq_ignore_ascii_case(cat.trim()))
                .ok_or_else(|| PromptError::UnknownLabel {
                    dimension: decl.name.clone(),
                    category: cat.clone(),
                })?;
            out.get_mut(&decl.name)
                .expect("declared")
                .insert(known.clone());
        }
    }
    Ok(out)
}

impl JsonlRecord for ElementList {
    fn unique_id(&self) -> Option<&str> {
        Some(&self.prompt_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ElementCategory;
    use crate::prompts::{ELEMENT_SPLIT_TEMPLATE, QUESTION_TEMPLATE};

    fn key(s: &str) -> ElementKey {
        s.parse().unwrap()
    }

    #[test]
    fn element_examples() {
        let els = parse_element_response(r#"["man (human)", "selfie (activity)"]"#).unwrap();
        assert_eq!(
            els,
            vec![
                ElementKey::new("man", ElementCategory::Human),
                ElementKey::new("selfie", ElementCategory::Activity)
            ]
        );
        assert_eq!(parse_element_response("[]").unwrap(), vec![]);
        assert!(matches!(
            parse_element_response(r#"["x (vehicle)"]"#),
            Err(PromptError::BadElement { .. })
        ));
        assert!(matches!(
            parse_element_response("no idea"),
            Err(PromptError::NotJson(_))
        ));
        let wrapped = parse_element_response("Elements: [\"cat (animal)\"]\n").unwrap();
        assert_eq!(wrapped.len(), 1);
    }

    #[test]
    fn few_shot_element_blocks_parse() {
        let blocks: Vec<&str> = ELEMENT_SPLIT_TEMPLATE
            .lines()
            .filter_map(|l| l.strip_prefix("Elements:"))
            .filter(|rest| rest.starts_with('['))
            .collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(parse_element_response(blocks[0]).unwrap().len(), 5);
        let second = parse_element_response(blocks[1]).unwrap();
        assert_eq!(
            second[4],
            ElementKey::new("several", ElementCategory::Counting)
        );
    }

    #[test]
    fn few_shot_question_blocks_parse() {
        let body = QUESTION_TEMPLATE.split_once("\n\n").unwrap().1;
        let blocks: Vec<&str> = body.split("\n\n").filter(|b| b.contains("Q:")).collect();
        assert_eq!(blocks.len(), 2);
        let q = parse_question_response(blocks[0], &key("man (human)")).unwrap();
        assert_eq!(
            (q.question.as_str(), q.answer),
            ("Is this a man?", Answer::Yes)
        );
        let q = parse_question_response(blocks[1], &key("0 (counting)")).unwrap();
        assert_eq!(
            (q.question.as_str(), q.answer),
            ("Are there any nuns in the photo?", Answer::No)
        );
    }

    #[test]
    fn question_leniency_and_errors() {
        let e = key("man (human)");
        let q = parse_question_response("Q: Is this a man?\nA: No", &e).unwrap();
        assert_eq!(q.answer, Answer::No);
        assert_eq!(q.choices, vec!["yes", "no"]);
        assert_eq!(
            parse_question_response("A: yes", &e),
            Err(PromptError::MissingLine("Q"))
        );
        assert_eq!(
            parse_question_response("Q: Is it?\nChoices: yes, no", &e),
            Err(PromptError::MissingLine("A"))
        );
        assert!(matches!(
            parse_question_response("Q: Is it?\nA: maybe", &e),
            Err(PromptError::BadAnswer(_))
        ));
        assert!(matches!(
            parse_question_response("Q: What color?\nChoices: red, blue\nA: yes", &e),
            Err(PromptError::BadChoices(_))
        ));
        let q = parse_question_response(
            "Q: Is it red?\nChoices: Yes, No\nA: Yes.\n\nQ: other\nA: no",
            &e,
        )
        .unwrap();
        assert_eq!((q.question.as_str(), q.answer), ("Is it red?", Answer::Yes));
    }

    #[test]
    fn category_labels() {
        let dims = vec![Dimension::new("style", &["Genre", "Design"])];
        let out = parse_category_response(r#"{"style": ["genre"]}"#, &dims).unwrap();
        assert_eq!(out["style"], BTreeSet::from(["Genre".to_string()]));
        assert!(parse_category_response(r#"{"style": ["Cubism"]}"#, &dims).is_err());
        assert!(parse_category_response(r#"{"mood": []}"#, &dims).is_err());
        assert_eq!(
            parse_category_response("{}", &dims).unwrap()["style"].len(),
            0
        );
    }
}
