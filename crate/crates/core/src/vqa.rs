//! Alignment scores from yes/no VQA logits.
//!
//! A question's affirmative probability is the two-way softmax of the "yes"
//! and "no" logits. PN scoring asks the question twice, once with the correct
//! answer substituted and once with the wrong one, and fuses the two
//! probabilities as `(P_T + 1 - P_F) / 2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Answer, ElementKey, FieldError, JsonlRecord, PredictionRecord};

pub const DEFAULT_OS_WEIGHT: f64 = 0.5;
/// Element truth strictly above this counts as aligned.
pub const HUMAN_MAJORITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VqaError {
    #[error("non-finite logit ({logit_yes}, {logit_no})")]
    NonFiniteLogit { logit_yes: f64, logit_no: f64 },
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("{name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("pair `{0}` has no element scores")]
    NoElements(String),
    #[error("pair `{pair_id}` element `{element}`: missing {variant:?} record")]
    MissingVariant {
        pair_id: String,
        element: ElementKey,
        variant: Variant,
    },
    #[error("pair `{pair_id}` element `{element}`: duplicate {variant:?} record")]
    Duplicate {
        pair_id: String,
        element: ElementKey,
        variant: Variant,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Question with the correct answer substituted.
    Positive,
    /// Question with the wrong answer substituted.
    Negative,
    /// Bare question.
    Plain,
}

fn default_true() -> bool {
    true
}

/// Logits a multimodal model assigned to the answer tokens for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaLogits {
    pub pair_id: String,
    pub element: ElementKey,
    pub variant: Variant,
    pub logit_yes: f64,
    pub logit_no: f64,
    /// Answer token strings as emitted, kept verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yes_token: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_token: Option<String>,
    /// Whether the question was prefixed with the generation prompt.
    #[serde(default = "default_true")]
    pub with_prompt: bool,
    /// Expected answer for plain questions; yes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementScoreSet {
    pub pair_id: String,
    pub scores: BTreeMap<ElementKey, f64>,
}

fn unit(name: &'static str, value: f64) -> Result<f64, VqaError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(VqaError::OutOfRange { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<f64, VqaError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(VqaError::NonFinite { name, value })
    }
}

/// `exp(y) / (exp(y) + exp(n))`, evaluated after shifting by the larger logit.
///
/// Swapping the logits yields exactly the complement.
pub fn yes_probability(logit_yes: f64, logit_no: f64) -> Result<f64, VqaError> {
    if !logit_yes.is_finite() || !logit_no.is_finite() {
        return Err(VqaError::NonFiniteLogit {
            logit_yes,
            logit_no,
        });
    }
    if logit_yes >= logit_no {
        Ok(1.0 / (1.0 + (logit_no - logit_yes).exp()))
    } else {
        Ok(1.0 - 1.0 / (1.0 + (logit_yes - logit_no).exp()))
    }
}

/// `(p_t + 1 - p_f) / 2`; swapping the arguments yields exactly the complement.
pub fn pn_fuse(p_t: f64, p_f: f64) -> Result<f64, VqaError> {
    let p_t = unit("p_t", p_t)?;
    let p_f = unit("p_f", p_f)?;
    if p_t >= p_f {
        Ok(0.5 + 0.5 * (p_t - p_f))
    } else {
        Ok(1.0 - (0.5 + 0.5 * (p_f - p_t)))
    }
}

/// Probability assigned to the expected answer.
pub fn tifa_element_score(
    logit_yes: f64,
    logit_no: f64,
    expected: Answer,
) -> Result<f64, VqaError> {
    match expected {
        Answer::Yes => yes_probability(logit_yes, logit_no),
        Answer::No => yes_probability(logit_no, logit_yes),
    }
}

/// Mean element score of one pair.
pub fn image_score_from_elements(set: &ElementScoreSet) -> Result<f64, VqaError> {
    if set.scores.is_empty() {
        return Err(VqaError::NoElements(set.pair_id.clone()));
    }
    Ok(set.scores.values().sum::<f64>() / set.scores.len() as f64)
}

/// `w * os + (1 - w) * es_avg`.
pub fn combine_os_es(os: f64, es_avg: f64, w: f64) -> Result<f64, VqaError> {
    let os = finite("os", os)?;
    let es_avg = finite("es_avg", es_avg)?;
    let w = unit("w", w)?;
    Ok(w * os + (1.0 - w) * es_avg)
}

/// 1 where the score is strictly above `threshold`.
pub fn binarize_elements(set: &ElementScoreSet, threshold: f64) -> BTreeMap<ElementKey, u8> {
    set.scores
        .iter()
        .map(|(k, &s)| (k.clone(), u8::from(s > threshold)))
        .collect()
}

/// Majority binarization of a human element truth; exact ties are not aligned.
pub fn human_label(truth: f64) -> u8 {
    u8::from(truth > HUMAN_MAJORITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Pn,
    Tifa,
}

type Slot<'a> = BTreeMap<(&'a str, &'a ElementKey), BTreeMap<Variant, &'a VqaLogits>>;

/// Scores every (pair, element) in `records`. PN uses the positive/negative
/// records whose `with_prompt` equals `with_prompt`; TIFA uses the plain
/// records. Output is sorted by pair id.
pub fn score_records(
    records: &[VqaLogits],
    method: Method,
    with_prompt: bool,
) -> Result<Vec<ElementScoreSet>, VqaError> {
    let mut slots: Slot = BTreeMap::new();
    for r in records {
        let wanted = match method {
            Method::Pn => r.variant != Variant::Plain && r.with_prompt == with_prompt,
            Method::Tifa => r.variant == Variant::Plain,
        };
        if !wanted {
            continue;
        }
        let slot = slots.entry((r.pair_id.as_str(), &r.element)).or_default();
        if slot.insert(r.variant, r).is_some() {
            return Err(VqaError::Duplicate {
                pair_id: r.pair_id.clone(),
                element: r.element.clone(),
                variant: r.variant,
            });
        }
    }

    let mut out: BTreeMap<&str, BTreeMap<ElementKey, f64>> = BTreeMap::new();
    for ((pair_id, element), slot) in slots {
        let get = |variant| {
            slot.get(&variant)
                .copied()
                .ok_or_else(|| VqaError::MissingVariant {
                    pair_id: pair_id.to_string(),
                    element: element.clone(),
                    variant,
                })
        };
        let score = match method {
            Method::Pn => {
                let pos = get(Variant::Positive)?;
                let neg = get(Variant::Negative)?;
                pn_fuse(
                    yes_probability(pos.logit_yes, pos.logit_no)?,
                    yes_probability(neg.logit_yes, neg.logit_no)?,
                )?
            }
            Method::Tifa => {
                let plain = get(Variant::Plain)?;
                tifa_element_score(
                    plain.logit_yes,
                    plain.logit_no,
                    plain.expected.unwrap_or(Answer::Yes),
                )?
            }
        };
        out.entry(pair_id)
            .or_default()
            .insert(element.clone(), score);
    }
    Ok(out
        .into_iter()
        .map(|(pair_id, scores)| ElementScoreSet {
            pair_id: pair_id.to_string(),
            scores,
        })
        .collect())
}

/// Prediction for a pair: the element mean, blended with `os` when given.
pub fn to_prediction(
    set: &ElementScoreSet,
    os: Option<f64>,
    w: f64,
    source: &str,
) -> Result<PredictionRecord, VqaError> {
    let es_avg = image_score_from_elements(set)?;
    let overall_score = match os {
        Some(os) => combine_os_es(os, es_avg, w)?,
        None => es_avg,
    };
    Ok(PredictionRecord {
        pair_id: set.pair_id.clone(),
        overall_score,
        element_scores: set.scores.clone(),
        source: source.to_string(),
    })
}

impl JsonlRecord for VqaLogits {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if !self.logit_yes.is_finite() {
            return Err(FieldError::new("logit_yes", "not a finite number"));
        }
        if !self.logit_no.is_finite() {
            return Err(FieldError::new("logit_no", "not a finite number"));
        }
        Ok(())
    }
}

impl JsonlRecord for ElementScoreSet {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        match self.scores.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            Some((k, _)) => Err(FieldError::new(format!("scores.{k}"), "outside [0, 1]")),
            None => Ok(()),
        }
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.pair_id)
    }
}
