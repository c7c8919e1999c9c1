use std::collections::BTreeMap;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;

use musebench::annotation::AggregatedPair;
use musebench::metrics::{
    correlations, element_samples, f1_threshold, overall_pairs, recall_rate, structural_accuracy,
    threshold_search, F1Mean, DEFAULT_STEP,
};
use musebench::model::{FieldError, JsonlRecord, PredictionRecord};

use super::{resolve, resolve_enum, value_name};
use crate::config::MetricsSection;
use crate::error::invalid;
use crate::run::Run;
use crate::{CorrArgs, FineArgs, MeanKind, StructuralArgs};

/// Probability above which a structural probe counts as answered "yes".
pub const YES_CUTOFF: f64 = 0.5;

pub fn corr(args: &CorrArgs) -> Result<()> {
    let mut run = Run::new("metrics corr", json!({}), &[&args.pred, &args.truth])?;
    run.check_outputs(&[&args.out])?;
    let preds: Vec<PredictionRecord> = run.jsonl(&args.pred)?;
    let truth: Vec<AggregatedPair> = run.jsonl(&args.truth)?;
    let (x, y) = overall_pairs(&preds, &truth)?;
    let c = correlations(&x, &y)?;
    run.write_json(&args.out, &c)?;
    run.finish(&args.out)?;
    Ok(())
}

pub fn fine(args: &FineArgs, cfg: &MetricsSection) -> Result<()> {
    let step = resolve(args.step, cfg.step, DEFAULT_STEP);
    let mut run = Run::new(
        "metrics fine",
        json!({ "step": step }),
        &[&args.pred, &args.truth],
    )?;
    run.check_outputs(&[&args.out])?;
    let preds: Vec<PredictionRecord> = run.jsonl(&args.pred)?;
    let truth: Vec<AggregatedPair> = run.jsonl(&args.truth)?;
    let samples = element_samples(&preds, &truth)?;
    if samples.unmatched > 0 {
        eprintln!(
            "warning: {} labeled elements have no predicted score",
            samples.unmatched
        );
    }
    let result = threshold_search(
        &samples.preds,
        &samples.labels,
        Some(&samples.categories),
        step,
    )?;
    run.write_json(&args.out, &result)?;
    run.finish(&args.out)?;
    Ok(())
}

/// One structural probe answer for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralRecord {
    pub pair_id: String,
    pub label: String,
    /// Whether annotators flagged the problem.
    pub problem: bool,
    /// Model probability of answering "yes".
    pub p_yes: f64,
}

impl JsonlRecord for StructuralRecord {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if !(0.0..=1.0).contains(&self.p_yes) {
            return Err(FieldError::new("p_yes", "outside [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct LabelSummary {
    threshold: f64,
    f1: f64,
    accuracy: f64,
    pos_acc: f64,
    neg_acc: f64,
    recall: f64,
    n: usize,
}

fn summarize(records: &[&StructuralRecord], step: f64, mean: F1Mean) -> Result<LabelSummary> {
    let pos: Vec<f64> = records
        .iter()
        .filter(|r| r.problem)
        .map(|r| r.p_yes)
        .collect();
    let neg: Vec<f64> = records
        .iter()
        .filter(|r| !r.problem)
        .map(|r| r.p_yes)
        .collect();
    let f1 = f1_threshold(&pos, &neg, step, mean)?;
    let answers: Vec<u8> = pos.iter().map(|&p| u8::from(p > YES_CUTOFF)).collect();
    Ok(LabelSummary {
        threshold: f1.threshold,
        f1: f1.f1,
        accuracy: structural_accuracy(f1.pos_acc, f1.neg_acc)?,
        pos_acc: f1.pos_acc,
        neg_acc: f1.neg_acc,
        recall: recall_rate(&answers)?,
        n: records.len(),
    })
}

#[derive(Serialize)]
struct StructuralOut {
    #[serde(flatten)]
    overall: LabelSummary,
    per_label: BTreeMap<String, LabelSummary>,
}

pub fn structural(args: &StructuralArgs, cfg: &MetricsSection) -> Result<()> {
    let step = resolve(args.step, cfg.step, DEFAULT_STEP);
    let mean = resolve_enum(
        args.mean,
        cfg.f1_mean.as_deref(),
        "metrics.f1_mean",
        MeanKind::Harmonic,
    )?;
    let settings = json!({ "step": step, "mean": value_name(&mean) });
    let mut run = Run::new("metrics structural", settings, &[&args.records])?;
    run.check_outputs(&[&args.out])?;
    let records: Vec<StructuralRecord> = run.jsonl(&args.records)?;
    let mean = match mean {
        MeanKind::Harmonic => F1Mean::Harmonic,
        MeanKind::Arithmetic => F1Mean::Arithmetic,
    };
    let all: Vec<&StructuralRecord> = records.iter().collect();
    if !all.iter().any(|r| r.problem) || all.iter().all(|r| r.problem) {
        return Err(invalid(
            "structural metrics need both flagged and clean records",
        ));
    }
    let overall = summarize(&all, step, mean)?;
    let mut by_label: BTreeMap<&str, Vec<&StructuralRecord>> = BTreeMap::new();
    for r in &records {
        by_label.entry(&r.label).or_default().push(r);
    }
    let mut per_label = BTreeMap::new();
    for (label, group) in by_label {
        if group.iter().any(|r| r.problem) && group.iter().any(|r| !r.problem) {
            per_label.insert(label.to_string(), summarize(&group, step, mean)?);
        }
    }
    run.write_json(&args.out, &StructuralOut { overall, per_label })?;
    run.finish(&args.out)?;
    Ok(())
}
