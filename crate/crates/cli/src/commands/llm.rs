use std::collections::HashMap;
use std::time::Duration;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use musebench::model::{Answer, ElementKey, Prompt};
use musebench::prompts::{
    build_element_split_request, build_question_request, parse_element_response,
    parse_question_response, render_pn_questions, ClientConfig, ElementList, LlmClient, LlmRequest,
    PromptError, MAX_REGENERATIONS,
};

use crate::config::LlmSection;
use crate::error::invalid;
use crate::run::Run;
use crate::{QuestionArgs, SplitArgs};

/// A request paired with the id of the item it was built for.
#[derive(Serialize)]
pub struct RequestRecord<'a> {
    pub id: String,
    pub request: &'a LlmRequest,
}

/// Non-secret client settings recorded in manifests.
pub fn llm_settings(cfg: &LlmSection) -> serde_json::Value {
    json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "retries": cfg.retries,
    })
}

pub fn apply_params(req: &mut LlmRequest, cfg: &LlmSection) {
    req.model = cfg.model.clone();
    req.params.temperature = cfg.temperature;
    req.params.max_tokens = cfg.max_tokens;
}

/// Endpoint and token from the environment; everything else from the config.
pub fn client(cfg: &LlmSection) -> Result<LlmClient> {
    let mut c = ClientConfig::from_env()
        .map_err(|e| invalid(format!("{e}; set the endpoint or pass --requests-only")))?;
    c.model = cfg.model.clone();
    if let Some(s) = cfg.timeout_secs {
        c.timeout = Duration::from_secs(s);
    }
    if let Some(r) = cfg.retries {
        c.retries = r;
    }
    if let Some(ms) = cfg.backoff_ms {
        c.backoff = Duration::from_millis(ms);
    }
    if let Some(n) = cfg.max_in_flight {
        c.max_in_flight = n.max(1);
    }
    c.cache_dir = cfg.cache_dir.clone();
    Ok(LlmClient::from_config(&c)?)
}

/// Sends every request concurrently, then re-asks sequentially, with a bumped
/// attempt counter, for each reply that does not parse. Items that never
/// parse come back as `None`.
pub fn resolve_all<T>(
    client: &LlmClient,
    requests: &[LlmRequest],
    parse: impl Fn(usize, &str) -> Result<T, PromptError>,
) -> Result<Vec<Option<T>>> {
    let first = client.dispatch_all(requests);
    let mut out = Vec::with_capacity(requests.len());
    for (i, reply) in first.into_iter().enumerate() {
        let mut value = parse(i, &reply?.text).ok();
        let mut attempt = 0;
        while value.is_none() && attempt < MAX_REGENERATIONS {
            attempt += 1;
            let mut req = requests[i].clone();
            req.attempt = attempt;
            value = parse(i, &client.dispatch(&req)?.text).ok();
        }
        out.push(value);
    }
    Ok(out)
}

fn report_failures(ids: &[String], results: &[Option<impl Sized>]) {
    let failed: Vec<&str> = ids
        .iter()
        .zip(results)
        .filter(|(_, r)| r.is_none())
        .map(|(id, _)| id.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!(
            "warning: {} replies never parsed after {} attempts: {}",
            failed.len(),
            MAX_REGENERATIONS + 1,
            failed.join(", ")
        );
    }
}

pub fn split_elements(args: &SplitArgs, cfg: &LlmSection) -> Result<()> {
    let mut settings = llm_settings(cfg);
    settings["requests_only"] = json!(args.requests_only);
    let mut run = Run::new("split-elements", settings, &[&args.prompts])?;
    run.check_outputs(&[&args.out])?;
    let prompts: Vec<Prompt> = run.jsonl(&args.prompts)?;
    let mut requests = Vec::with_capacity(prompts.len());
    for p in &prompts {
        let mut req = build_element_split_request(&p.text)
            .map_err(|e| invalid(format!("prompt `{}`: {e}", p.prompt_id)))?;
        apply_params(&mut req, cfg);
        requests.push(req);
    }
    let ids: Vec<String> = prompts.iter().map(|p| p.prompt_id.clone()).collect();

    if args.requests_only {
        let records: Vec<RequestRecord> = ids
            .iter()
            .zip(&requests)
            .map(|(id, request)| RequestRecord {
                id: id.clone(),
                request,
            })
            .collect();
        run.write_jsonl(&args.out, &records)?;
    } else {
        let client = client(cfg)?;
        let results = resolve_all(&client, &requests, |_, text| parse_element_response(text))?;
        report_failures(&ids, &results);
        let lists: Vec<ElementList> = ids
            .iter()
            .zip(results)
            .filter_map(|(id, r)| {
                r.map(|elements| ElementList {
                    prompt_id: id.clone(),
                    elements,
                })
            })
            .collect();
        run.write_jsonl(&args.out, &lists)?;
    }
    run.finish(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct PnQuestions {
    with_prompt: [String; 2],
    without_prompt: [String; 2],
}

#[derive(Serialize)]
struct QuestionRecord {
    prompt_id: String,
    element: ElementKey,
    question: String,
    choices: Vec<String>,
    answer: Answer,
    /// Positive then negative PN renderings.
    pn: PnQuestions,
}

pub fn gen_questions(args: &QuestionArgs, cfg: &LlmSection) -> Result<()> {
    let mut settings = llm_settings(cfg);
    settings["requests_only"] = json!(args.requests_only);
    let mut run = Run::new("gen-questions", settings, &[&args.prompts, &args.elements])?;
    run.check_outputs(&[&args.out])?;
    let prompts: Vec<Prompt> = run.jsonl(&args.prompts)?;
    let lists: Vec<ElementList> = run.jsonl(&args.elements)?;
    let text_of: HashMap<&str, &str> = prompts
        .iter()
        .map(|p| (p.prompt_id.as_str(), p.text.as_str()))
        .collect();

    let mut items: Vec<(&str, &str, &ElementKey)> = Vec::new();
    for list in &lists {
        let text = text_of.get(list.prompt_id.as_str()).ok_or_else(|| {
            invalid(format!(
                "element list for unknown prompt `{}`",
                list.prompt_id
            ))
        })?;
        items.extend(
            list.elements
                .iter()
                .map(|e| (list.prompt_id.as_str(), *text, e)),
        );
    }
    let mut requests = Vec::with_capacity(items.len());
    for (id, text, element) in &items {
        let mut req = build_question_request(text, element)
            .map_err(|e| invalid(format!("prompt `{id}`: {e}")))?;
        apply_params(&mut req, cfg);
        requests.push(req);
    }
    let ids: Vec<String> = items.iter().map(|(id, _, e)| format!("{id}/{e}")).collect();

    if args.requests_only {
        let records: Vec<RequestRecord> = ids
            .iter()
            .zip(&requests)
            .map(|(id, request)| RequestRecord {
                id: id.clone(),
                request,
            })
            .collect();
        run.write_jsonl(&args.out, &records)?;
    } else {
        let client = client(cfg)?;
        let results = resolve_all(&client, &requests, |i, text| {
            parse_question_response(text, items[i].2)
        })?;
        report_failures(&ids, &results);
        let records: Vec<QuestionRecord> = items
            .iter()
            .zip(results)
            .filter_map(|((id, text, _), q)| {
                let q = q?;
                let (p_pos, p_neg) = render_pn_questions(text, &q.question, q.answer, true);
                let (b_pos, b_neg) = render_pn_questions(text, &q.question, q.answer, false);
                Some(QuestionRecord {
                    prompt_id: id.to_string(),
                    element: q.element,
                    question: q.question,
                    choices: q.choices,
                    answer: q.answer,
                    pn: PnQuestions {
                        with_prompt: [p_pos, p_neg],
                        without_prompt: [b_pos, b_neg],
                    },
                })
            })
            .collect();
        run.write_jsonl(&args.out, &records)?;
    }
    run.finish(&args.out)?;
    Ok(())
}
