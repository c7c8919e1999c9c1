use std::collections::{BTreeMap, BTreeSet};

use anyhow::Result;
use serde_json::json;

use musebench::model::{Origin, Prompt};
use musebench::prompts::{
    build_synth_request, draw_synth_keywords, finish_activity_prompt, gen_count_prompt,
    gen_writing_prompt, DrawnKeywords, KeywordCorpus, LlmRequest, PromptError, SynthCategory,
};

use super::llm::{apply_params, client, llm_settings, resolve_all, RequestRecord};
use super::resolve;
use crate::config::{LlmSection, SynthSection};
use crate::error::invalid;
use crate::run::Run;
use crate::SynthArgs;

pub const DEFAULT_PER_CATEGORY: usize = 10;

fn category_name(c: SynthCategory) -> &'static str {
    match c {
        SynthCategory::ColorMaterial => "color_material",
        SynthCategory::LocationWeatherTime => "location_weather_time",
        SynthCategory::ActivityPerspective => "activity_perspective",
        SynthCategory::SpatialComposition => "spatial_composition",
    }
}

fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (dim, cat) in pairs {
        out.entry(dim.to_string())
            .or_default()
            .insert(cat.to_string());
    }
    out
}

fn category_labels(c: SynthCategory) -> BTreeMap<String, BTreeSet<String>> {
    match c {
        SynthCategory::ColorMaterial => labels(&[("logic", "Color"), ("style", "Material")]),
        SynthCategory::LocationWeatherTime => labels(&[]),
        SynthCategory::ActivityPerspective => labels(&[("logic", "Perspective")]),
        SynthCategory::SpatialComposition => labels(&[("logic", "Position Relationship")]),
    }
}

fn synthetic(id: String, text: String, categories: BTreeMap<String, BTreeSet<String>>) -> Prompt {
    Prompt {
        prompt_id: id,
        text,
        origin: Origin::Synthetic,
        categories,
        embedding: None,
        meaningless_flag: None,
    }
}

/// Seed of item `i` in generator slot `slot`.
fn item_seed(base: u64, slot: u64, i: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add(slot << 32)
        .wrapping_add(i as u64)
}

fn clean_reply(text: &str) -> Result<String, PromptError> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let line = line.trim_matches('"').trim();
    if line.is_empty() {
        Err(PromptError::EmptyPrompt)
    } else {
        Ok(line.to_string())
    }
}

pub fn run(args: &SynthArgs, cfg: &SynthSection, llm: &LlmSection) -> Result<()> {
    let per_category = resolve(args.per_category, cfg.per_category, DEFAULT_PER_CATEGORY);
    let seed = resolve(args.seed, cfg.seed, 0);
    let mut settings = llm_settings(llm);
    settings["per_category"] = json!(per_category);
    settings["seed"] = json!(seed);
    settings["requests_only"] = json!(args.requests_only);
    settings["corpus"] = json!(if args.corpus.is_some() {
        "file"
    } else {
        "builtin"
    });

    let inputs: Vec<&std::path::Path> = args.corpus.iter().map(|p| p.as_path()).collect();
    let mut run = Run::new("synth", settings, &inputs)?;
    let mut outputs = vec![args.out.as_path()];
    outputs.extend(args.requests.as_deref());
    run.check_outputs(&outputs)?;

    let corpus = match &args.corpus {
        Some(path) => run.json(path)?,
        None => KeywordCorpus::builtin(),
    };

    let mut prompts = Vec::new();
    for i in 0..per_category {
        let text = gen_count_prompt(&corpus, item_seed(seed, 0, i))?;
        prompts.push(synthetic(
            format!("syn-counting-{i:04}"),
            text,
            labels(&[("logic", "Number")]),
        ));
    }
    for i in 0..per_category {
        let text = gen_writing_prompt(&corpus, item_seed(seed, 1, i))?;
        prompts.push(synthetic(
            format!("syn-writing-{i:04}"),
            text,
            labels(&[("logic", "Writing & Symbols")]),
        ));
    }

    let mut jobs: Vec<(String, SynthCategory, DrawnKeywords)> = Vec::new();
    let mut requests: Vec<LlmRequest> = Vec::new();
    for (slot, category) in SynthCategory::ALL.into_iter().enumerate() {
        for i in 0..per_category {
            let k = draw_synth_keywords(category, &corpus, item_seed(seed, slot as u64 + 2, i))?;
            let mut req = build_synth_request(category, &k)?;
            apply_params(&mut req, llm);
            requests.push(req);
            jobs.push((
                format!("syn-{}-{i:04}", category_name(category)),
                category,
                k,
            ));
        }
    }

    if args.requests_only {
        let path = args.requests.as_ref().expect("clap requires --requests");
        let records: Vec<RequestRecord> = jobs
            .iter()
            .zip(&requests)
            .map(|((id, _, _), request)| RequestRecord {
                id: id.clone(),
                request,
            })
            .collect();
        run.write_jsonl(&args.out, &prompts)?;
        run.write_jsonl(path, &records)?;
    } else {
        if requests.is_empty() {
            return Err(invalid("nothing to generate"));
        }
        let client = client(llm)?;
        let results = resolve_all(&client, &requests, |i, text| {
            let line = clean_reply(text)?;
            let (_, category, k) = &jobs[i];
            Ok(match (category, &k.perspective) {
                (SynthCategory::ActivityPerspective, Some(p)) => finish_activity_prompt(&line, p),
                _ => line,
            })
        })?;
        for ((id, category, _), text) in jobs.into_iter().zip(results) {
            match text {
                Some(text) => prompts.push(synthetic(id, text, category_labels(category))),
                None => eprintln!("warning: no usable reply for `{id}`"),
            }
        }
        run.write_jsonl(&args.out, &prompts)?;
    }
    run.finish(&args.out)?;
    Ok(())
}
