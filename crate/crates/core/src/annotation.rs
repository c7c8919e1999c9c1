//! Aggregation of multi-annotator labels into ground truth.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{AnnotationRecord, ElementCategory, ElementKey, FieldError, JsonlRecord};

/// Score range at or above which a pair goes back for more annotation.
pub const REANNOTATION_RANGE: u8 = 2;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_ETA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnotationError {
    #[error("pair `{0}` has no alignment scores")]
    EmptyScores(String),
    #[error("pair `{pair_id}`: score {score} outside 1..=5")]
    ScoreOutOfRange { pair_id: String, score: u8 },
    #[error("{name} must be a finite non-negative number, got {value}")]
    InvalidInput { name: &'static str, value: f64 },
    #[error("pair `{0}` has no prompt mapping")]
    MissingPrompt(String),
    #[error("histogram needs at least one bin")]
    NoBins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedPair {
    pub pair_id: String,
    pub overall_score: f64,
    /// Fraction of annotators voting the element as present.
    pub element_truth: BTreeMap<ElementKey, f64>,
    /// Max minus min annotator score.
    pub score_range: u8,
    pub needs_reannotation: bool,
    pub discarded: bool,
}

pub fn aggregate_pair(rec: &AnnotationRecord) -> Result<AggregatedPair, AnnotationError> {
    let scores = &rec.alignment_scores;
    if scores.is_empty() {
        return Err(AnnotationError::EmptyScores(rec.pair_id.clone()));
    }
    if let Some(&score) = scores.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(AnnotationError::ScoreOutOfRange {
            pair_id: rec.pair_id.clone(),
            score,
        });
    }
    let min = *scores.iter().min().expect("non-empty");
    let max = *scores.iter().max().expect("non-empty");
    let sum: u32 = scores.iter().map(|&s| u32::from(s)).sum();
    let overall_score = f64::from(sum) / scores.len() as f64;

    let mut element_truth = BTreeMap::new();
    for (key, votes) in &rec.element_votes {
        let cast: Vec<u8> = votes.iter().flatten().copied().collect();
        if cast.is_empty() {
            continue;
        }
        let yes = cast.iter().filter(|&&v| v == 1).count();
        element_truth.insert(key.clone(), yes as f64 / cast.len() as f64);
    }

    Ok(AggregatedPair {
        pair_id: rec.pair_id.clone(),
        overall_score,
        element_truth,
        score_range: max - min,
        needs_reannotation: max - min >= REANNOTATION_RANGE,
        discarded: rec.nsfw_discard,
    })
}

pub fn aggregate_all(records: &[AnnotationRecord]) -> Result<Vec<AggregatedPair>, AnnotationError> {
    records.iter().map(aggregate_pair).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadMeasure {
    /// Population standard deviation.
    #[default]
    Sd,
    /// Population variance.
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptVariance {
    pub prompt_id: String,
    pub sigma: f64,
    pub n_images: usize,
}

/// Spread of the per-image scores of one prompt.
///
/// Scores are sorted and shifted by their minimum before the two-pass sum, so
/// the result does not depend on image order and is exactly zero when all
/// scores are equal.
pub fn spread(scores: &[f64], measure: SpreadMeasure) -> f64 {
    if scores.len() < 2 {
        return 0.0;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let base = sorted[0];
    let shifted: Vec<f64> = sorted.iter().map(|s| s - base).collect();
    let n = shifted.len() as f64;
    let mean = shifted.iter().sum::<f64>() / n;
    let var = shifted.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    match measure {
        SpreadMeasure::Sd => var.sqrt(),
        SpreadMeasure::Variance => var,
    }
}

pub fn prompt_sigma(prompt_id: &str, scores: &[f64], measure: SpreadMeasure) -> PromptVariance {
    PromptVariance {
        prompt_id: prompt_id.to_string(),
        sigma: spread(scores, measure),
        n_images: scores.len(),
    }
}

/// Groups non-discarded pairs by prompt and computes each prompt's spread.
/// Output is sorted by prompt id.
pub fn prompt_sigmas(
    pairs: &[AggregatedPair],
    prompt_of: &HashMap<String, String>,
    measure: SpreadMeasure,
) -> Result<Vec<PromptVariance>, AnnotationError> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for pair in pairs.iter().filter(|p| !p.discarded) {
        let prompt = prompt_of
            .get(&pair.pair_id)
            .ok_or_else(|| AnnotationError::MissingPrompt(pair.pair_id.clone()))?;
        groups.entry(prompt).or_default().push(pair.overall_score);
    }
    Ok(groups
        .into_iter()
        .map(|(id, scores)| prompt_sigma(id, &scores, measure))
        .collect())
}

fn check_input(name: &'static str, value: f64) -> Result<f64, AnnotationError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(AnnotationError::InvalidInput { name, value })
    }
}

/// `e^sigma`.
pub fn loss_weight(sigma: f64) -> Result<f64, AnnotationError> {
    Ok(check_input("sigma", sigma)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: f64,
    pub eta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda: DEFAULT_LAMBDA,
            eta: DEFAULT_ETA,
        }
    }
}

/// `e^sigma * (l_os + lambda * l_es + eta * l_mask)`.
pub fn combine_losses(
    l_os: f64,
    l_es: f64,
    l_mask: f64,
    sigma: f64,
    weights: LossWeights,
) -> Result<f64, AnnotationError> {
    let l_os = check_input("l_os", l_os)?;
    let l_es = check_input("l_es", l_es)?;
    let l_mask = check_input("l_mask", l_mask)?;
    let lambda = check_input("lambda", weights.lambda)?;
    let eta = check_input("eta", weights.eta)?;
    Ok(loss_weight(sigma)? * (l_os + (lambda * l_es + eta * l_mask)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self, AnnotationError> {
        if bins == 0 {
            return Err(AnnotationError::NoBins);
        }
        let width = (hi - lo) / bins as f64;
        Ok(Histogram {
            edges: (0..=bins).map(|i| lo + width * i as f64).collect(),
            counts: vec![0; bins],
        })
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let lo = self.edges[0];
        let width = (self.edges[bins] - lo) / bins as f64;
        let idx = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub elements: usize,
    pub mean_truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub pairs: usize,
    pub discarded: usize,
    pub reannotation_flagged: usize,
    pub score_histogram: Histogram,
    /// `max_diff_counts[d]` pairs have score range `d`, for d in 0..=4.
    pub max_diff_counts: Vec<usize>,
    pub categories: BTreeMap<ElementCategory, CategoryStats>,
}

impl StatsReport {
    /// Fraction of counted pairs whose score range is below `d`.
    pub fn max_diff_fraction_below(&self, d: usize) -> f64 {
        let total: usize = self.max_diff_counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let below: usize = self.max_diff_counts.iter().take(d).sum();
        below as f64 / total as f64
    }

    pub fn max_diff_csv(&self) -> String {
        let mut out = String::from("max_diff,count\n");
        for (d, c) in self.max_diff_counts.iter().enumerate() {
            out.push_str(&format!("{d},{c}\n"));
        }
        out
    }
}

/// Corpus statistics over non-discarded pairs.
pub fn dataset_stats(
    pairs: &[AggregatedPair],
    bins: usize,
) -> Result<StatsReport, AnnotationError> {
    let mut score_histogram = Histogram::uniform(1.0, 5.0, bins)?;
    let mut max_diff_counts = vec![0usize; 5];
    let mut sums: BTreeMap<ElementCategory, (usize, f64)> = BTreeMap::new();
    let mut counted = 0;
    let mut flagged = 0;
    for pair in pairs.iter().filter(|p| !p.discarded) {
        counted += 1;
        score_histogram.add(pair.overall_score);
        max_diff_counts[usize::from(pair.score_range).min(4)] += 1;
        if pair.needs_reannotation {
            flagged += 1;
        }
        for (key, &truth) in &pair.element_truth {
            let slot = sums.entry(key.category).or_default();
            slot.0 += 1;
            slot.1 += truth;
        }
    }
    Ok(StatsReport {
        pairs: counted,
        discarded: pairs.len() - counted,
        reannotation_flagged: flagged,
        score_histogram,
        max_diff_counts,
        categories: sums
            .into_iter()
            .map(|(c, (n, s))| {
                (
                    c,
                    CategoryStats {
                        elements: n,
                        mean_truth: s / n as f64,
                    },
                )
            })
            .collect(),
    })
}

impl JsonlRecord for AggregatedPair {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if !self.overall_score.is_finite() {
            return Err(FieldError::new("overall_score", "not a finite number"));
        }
        if let Some((k, _)) = self
            .element_truth
            .iter()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(FieldError::new(
                format!("element_truth.{k}"),
                "outside [0, 1]",
            ));
        }
        Ok(())
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.pair_id)
    }
}

impl JsonlRecord for PromptVariance {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(FieldError::new("sigma", "must be finite and non-negative"));
        }
        Ok(())
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.prompt_id)
    }
}
