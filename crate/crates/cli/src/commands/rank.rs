use std::collections::{HashMap, HashSet};

use anyhow::Result;
use serde_json::json;

use musebench::annotation::AggregatedPair;
use musebench::model::{ImagePair, PredictionRecord};
use musebench::report::{aggregate_models, rank_models, ReportFormat, ScoreRecord};

use super::{resolve_enum, value_name};
use crate::config::ReportSection;
use crate::error::invalid;
use crate::run::Run;
use crate::{Format, RankArgs};

pub fn run(args: &RankArgs, cfg: &ReportSection) -> Result<()> {
    let format = resolve_enum(
        args.format,
        cfg.format.as_deref(),
        "report.format",
        Format::Md,
    )?;
    let settings = json!({ "format": value_name(&format) });
    let mut inputs = Vec::new();
    inputs.extend(args.scores.as_deref());
    inputs.extend(args.pred.as_deref());
    inputs.extend(args.pairs.as_deref());
    inputs.extend(args.truth.as_deref());
    let mut run = Run::new("rank", settings, &inputs)?;
    run.check_outputs(&[&args.out])?;

    let records: Vec<ScoreRecord> = match (&args.scores, &args.pred, &args.pairs) {
        (Some(path), _, _) => run.jsonl(path)?,
        (None, Some(pred), Some(pairs)) => {
            let preds: Vec<PredictionRecord> = run.jsonl(pred)?;
            let pairs: Vec<ImagePair> = run.jsonl(pairs)?;
            let discarded: HashSet<String> = match &args.truth {
                Some(path) => {
                    let truth: Vec<AggregatedPair> = run.jsonl(path)?;
                    truth
                        .into_iter()
                        .filter(|t| t.discarded)
                        .map(|t| t.pair_id)
                        .collect()
                }
                None => HashSet::new(),
            };
            let model_of: HashMap<&str, &str> = pairs
                .iter()
                .map(|p| (p.pair_id.as_str(), p.model_name.as_str()))
                .collect();
            preds
                .into_iter()
                .map(|p| {
                    let model = model_of.get(p.pair_id.as_str()).ok_or_else(|| {
                        invalid(format!("pair `{}` is not in the pair list", p.pair_id))
                    })?;
                    Ok(ScoreRecord {
                        model_name: model.to_string(),
                        discarded: discarded.contains(&p.pair_id),
                        pair_id: p.pair_id,
                        overall_score: p.overall_score,
                        element_scores: p.element_scores,
                    })
                })
                .collect::<Result<_>>()?
        }
        _ => return Err(invalid("pass --scores, or --pred with --pairs")),
    };

    let table = rank_models(&aggregate_models(&records))?;
    let format = match format {
        Format::Md => ReportFormat::Markdown,
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    };
    run.write(&args.out, table.render(format)?.as_bytes())?;
    run.finish(&args.out)?;
    Ok(())
}
