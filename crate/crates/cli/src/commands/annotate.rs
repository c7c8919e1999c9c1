use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use musebench::annotation::{
    aggregate_all, dataset_stats, loss_weight, prompt_sigmas, AggregatedPair, SpreadMeasure,
};
use musebench::model::{AnnotationRecord, ImagePair};

use super::{resolve, resolve_enum, value_name};
use crate::config::AnnotationSection;
use crate::run::Run;
use crate::{AggregateArgs, Measure, SigmaArgs, StatsArgs};

pub const DEFAULT_BINS: usize = 8;

pub fn aggregate(args: &AggregateArgs) -> Result<()> {
    let mut run = Run::new("aggregate", json!({}), &[&args.annotations])?;
    run.check_outputs(&[&args.out])?;
    let records: Vec<AnnotationRecord> = run.jsonl(&args.annotations)?;
    let pairs = aggregate_all(&records)?;
    run.write_jsonl(&args.out, &pairs)?;
    run.finish(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct SigmaRecord<'a> {
    prompt_id: &'a str,
    sigma: f64,
    n_images: usize,
    loss_weight: f64,
}

pub fn sigma(args: &SigmaArgs, cfg: &AnnotationSection) -> Result<()> {
    let measure = resolve_enum(
        args.measure,
        cfg.measure.as_deref(),
        "annotation.measure",
        Measure::Sd,
    )?;
    let settings = json!({ "measure": value_name(&measure) });
    let mut run = Run::new("sigma", settings, &[&args.aggregated, &args.pairs])?;
    run.check_outputs(&[&args.out])?;
    let aggregated: Vec<AggregatedPair> = run.jsonl(&args.aggregated)?;
    let pairs: Vec<ImagePair> = run.jsonl(&args.pairs)?;
    let prompt_of: HashMap<String, String> = pairs
        .into_iter()
        .map(|p| (p.pair_id, p.prompt_id))
        .collect();
    let measure = match measure {
        Measure::Sd => SpreadMeasure::Sd,
        Measure::Variance => SpreadMeasure::Variance,
    };
    let sigmas = prompt_sigmas(&aggregated, &prompt_of, measure)?;
    let records = sigmas
        .iter()
        .map(|s| {
            Ok(SigmaRecord {
                prompt_id: &s.prompt_id,
                sigma: s.sigma,
                n_images: s.n_images,
                loss_weight: loss_weight(s.sigma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run.write_jsonl(&args.out, &records)?;
    run.finish(&args.out)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn stats(args: &StatsArgs, cfg: &AnnotationSection) -> Result<()> {
    let bins = resolve(args.bins, cfg.bins, DEFAULT_BINS);
    let mut run = Run::new("stats", json!({ "bins": bins }), &[&args.aggregated])?;
    let histogram_csv = sibling(&args.out, "histogram.csv");
    let max_diff_csv = sibling(&args.out, "max_diff.csv");
    run.check_outputs(&[&args.out, &histogram_csv, &max_diff_csv])?;
    let aggregated: Vec<AggregatedPair> = run.jsonl(&args.aggregated)?;
    let report = dataset_stats(&aggregated, bins)?;
    run.write_json(&args.out, &report)?;
    run.write(&histogram_csv, report.score_histogram.to_csv().as_bytes())?;
    run.write(&max_diff_csv, report.max_diff_csv().as_bytes())?;
    run.finish(&args.out)?;
    Ok(())
}
