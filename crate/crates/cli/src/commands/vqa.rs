use std::collections::HashMap;
use std::fmt::Write as _;

use anyhow::Result;
use serde_json::json;

use musebench::model::PredictionRecord;
use musebench::vqa::{
    image_score_from_elements, score_records, to_prediction, Method, VqaLogits, DEFAULT_OS_WEIGHT,
};

use super::{resolve, resolve_enum, value_name};
use crate::config::VqaSection;
use crate::error::invalid;
use crate::run::Run;
use crate::{ScoreVqaArgs, VqaMethod};

pub fn run(args: &ScoreVqaArgs, cfg: &VqaSection) -> Result<()> {
    let method = resolve_enum(
        args.method,
        cfg.method.as_deref(),
        "vqa.method",
        VqaMethod::Pn,
    )?;
    let with_prompt = !args.no_prompt_context && cfg.with_prompt.unwrap_or(true);
    let weight = resolve(args.weight, cfg.weight, DEFAULT_OS_WEIGHT);
    let default_source = format!("{}-vqa", value_name(&method));
    let source = resolve(args.source.clone(), cfg.source.clone(), default_source);
    let mut settings = json!({
        "method": value_name(&method),
        "with_prompt": with_prompt,
        "source": source,
    });
    if args.overall.is_some() {
        settings["weight"] = json!(weight);
    }

    let mut inputs = vec![args.logits.as_path()];
    inputs.extend(args.overall.as_deref());
    let mut run = Run::new("score-vqa", settings, &inputs)?;
    let mut outputs = vec![args.out.as_path()];
    outputs.extend(args.csv.as_deref());
    outputs.extend(args.pred_out.as_deref());
    run.check_outputs(&outputs)?;

    let logits: Vec<VqaLogits> = run.jsonl(&args.logits)?;
    let method = match method {
        VqaMethod::Pn => Method::Pn,
        VqaMethod::Tifa => Method::Tifa,
    };
    let sets = score_records(&logits, method, with_prompt)?;
    if sets.is_empty() {
        return Err(invalid(
            "no logit records match the requested method and prompt context",
        ));
    }
    let overall: Option<HashMap<String, f64>> = match &args.overall {
        Some(path) => {
            let preds: Vec<PredictionRecord> = run.jsonl(path)?;
            Some(
                preds
                    .into_iter()
                    .map(|p| (p.pair_id, p.overall_score))
                    .collect(),
            )
        }
        None => None,
    };

    let mut preds = Vec::with_capacity(sets.len());
    let mut csv = String::from("pair_id,es_avg,score\n");
    for set in &sets {
        let os =
            match &overall {
                Some(map) => Some(*map.get(&set.pair_id).ok_or_else(|| {
                    invalid(format!("no overall score for pair `{}`", set.pair_id))
                })?),
                None => None,
            };
        let pred = to_prediction(set, os, weight, &source)?;
        let es_avg = image_score_from_elements(set)?;
        writeln!(csv, "{},{},{}", set.pair_id, es_avg, pred.overall_score)?;
        preds.push(pred);
    }

    run.write_jsonl(&args.out, &sets)?;
    if let Some(path) = &args.csv {
        run.write(path, csv.as_bytes())?;
    }
    if let Some(path) = &args.pred_out {
        run.write_jsonl(path, &preds)?;
    }
    run.finish(&args.out)?;
    Ok(())
}
