use std::collections::HashMap;

use crate::annotation::AggregatedPair;
use crate::model::PredictionRecord;
use crate::vqa::human_label;

use super::MetricsError;

fn index(preds: &[PredictionRecord]) -> HashMap<&str, &PredictionRecord> {
    preds.iter().map(|p| (p.pair_id.as_str(), p)).collect()
}

/// Predicted and human overall scores for every non-discarded pair, in
/// `truth` order.
pub fn overall_pairs(
    preds: &[PredictionRecord],
    truth: &[AggregatedPair],
) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let by_id = index(preds);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for pair in truth.iter().filter(|p| !p.discarded) {
        let pred = by_id
            .get(pair.pair_id.as_str())
            .ok_or_else(|| MetricsError::MissingPrediction(pair.pair_id.clone()))?;
        x.push(pred.overall_score);
        y.push(pair.overall_score);
    }
    Ok((x, y))
}

/// Element-level samples for threshold search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElementSamples {
    pub preds: Vec<f64>,
    /// Human truth binarized by majority.
    pub labels: Vec<u8>,
    pub categories: Vec<Vec<String>>,
    /// Human-labeled elements with no predicted score.
    pub unmatched: usize,
}

pub fn element_samples(
    preds: &[PredictionRecord],
    truth: &[AggregatedPair],
) -> Result<ElementSamples, MetricsError> {
    let by_id = index(preds);
    let mut out = ElementSamples::default();
    for pair in truth.iter().filter(|p| !p.discarded) {
        let pred = by_id
            .get(pair.pair_id.as_str())
            .ok_or_else(|| MetricsError::MissingPrediction(pair.pair_id.clone()))?;
        for (key, &t) in &pair.element_truth {
            match pred.element_scores.get(key) {
                Some(&s) => {
                    out.preds.push(s);
                    out.labels.push(human_label(t));
                    out.categories.push(vec![key.category.to_string()]);
                }
                None => out.unmatched += 1,
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::model::ElementKey;

    #[test]
    fn joins_by_pair_id() {
        let cat: ElementKey = "cat (animal)".parse().unwrap();
        let red: ElementKey = "red (color)".parse().unwrap();
        let truth = vec![
            AggregatedPair {
                pair_id: "a".into(),
                overall_score: 4.0,
                element_truth: [(cat.clone(), 1.0), (red.clone(), 0.5)]
                    .into_iter()
                    .collect(),
                score_range: 0,
                needs_reannotation: false,
                discarded: false,
            },
            AggregatedPair {
                pair_id: "z".into(),
                overall_score: 1.0,
                element_truth: BTreeMap::new(),
                score_range: 0,
                needs_reannotation: false,
                discarded: true,
            },
        ];
        let preds = vec![PredictionRecord {
            pair_id: "a".into(),
            overall_score: 0.7,
            element_scores: [(cat, 0.9)].into_iter().collect(),
            source: "m".into(),
        }];
        assert_eq!(
            overall_pairs(&preds, &truth).unwrap(),
            (vec![0.7], vec![4.0])
        );
        let s = element_samples(&preds, &truth).unwrap();
        assert_eq!(s.preds, vec![0.9]);
        assert_eq!(s.labels, vec![1]);
        assert_eq!(s.categories, vec![vec!["animal".to_string()]]);
        assert_eq!(s.unmatched, 1);
        assert_eq!(
            overall_pairs(&[], &truth),
            Err(MetricsError::MissingPrediction("a".into()))
        );
    }
}
