use std::collections::HashMap;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use musebench::annotation::PromptVariance;
use musebench::model::{default_dimensions, Dimension, Prompt};
use musebench::shaping::{
    build_targets, shape, variance_ranked_select, BnbOptions, MembershipMatrices, Proof,
    ShapingProblemFile, SolveMode, DEFAULT_MAX_NODES, DEFAULT_ORACLE_CAP,
};

use super::{resolve, resolve_enum, value_name};
use crate::config::SampleSection;
use crate::error::invalid;
use crate::run::Run;
use crate::{SampleArgs, Solver};

#[derive(Serialize)]
struct SelectionOut<'a> {
    chosen: &'a [usize],
    objective: f64,
    proof: Proof,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt_ids: Option<Vec<String>>,
}

pub fn run(args: &SampleArgs, cfg: &SampleSection) -> Result<()> {
    let flag_solver = if args.oracle {
        Some(Solver::Oracle)
    } else if args.greedy {
        Some(Solver::Greedy)
    } else {
        None
    };
    let solver = resolve_enum(
        flag_solver,
        cfg.solver.as_deref(),
        "sample.solver",
        Solver::Exact,
    )?;
    let budget = resolve(args.budget_nodes, cfg.budget_nodes, DEFAULT_MAX_NODES);
    let cap = cfg.oracle_cap.map_or(DEFAULT_ORACLE_CAP, u128::from);
    let mode = match solver {
        Solver::Exact => SolveMode::Exact(BnbOptions {
            max_nodes: budget,
            warm_start: true,
        }),
        Solver::Greedy => SolveMode::Greedy,
        Solver::Oracle => SolveMode::Oracle { cap },
    };
    let top_k = args.top_k.or(cfg.top_k);
    let n = args.n.or(cfg.n);

    let mut settings = json!({ "solver": value_name(&solver), "n": n });
    match solver {
        Solver::Exact => settings["budget_nodes"] = json!(budget),
        Solver::Oracle => settings["oracle_cap"] = json!(cap.to_string()),
        Solver::Greedy => {}
    }
    if args.variances.is_some() {
        settings["top_k"] = json!(top_k);
    }
    if args.corpus.is_some() {
        settings["dimensions"] = json!(match (&args.dimensions, args.infer_dimensions) {
            (Some(_), _) => "file",
            (None, true) => "inferred",
            (None, false) => "default",
        });
    }

    let mut inputs = Vec::new();
    inputs.extend(args.corpus.as_deref());
    inputs.extend(args.problem.as_deref());
    inputs.extend(args.dimensions.as_deref());
    inputs.extend(args.variances.as_deref());
    let mut run = Run::new("sample", settings, &inputs)?;
    let mut outputs = vec![args.out.as_path()];
    outputs.extend(args.subset_out.as_deref());
    run.check_outputs(&outputs)?;

    if let Some(path) = &args.problem {
        let file: ShapingProblemFile = run.json(path)?;
        if n.is_some_and(|n| n != file.n) {
            return Err(invalid(format!(
                "--n {} disagrees with the instance's n = {}",
                n.unwrap(),
                file.n
            )));
        }
        let (b, d) = file.to_problem().context("loading shaping instance")?;
        let sel = shape(&b, &d, mode)?;
        let out = SelectionOut {
            chosen: &sel.chosen,
            objective: sel.objective,
            proof: sel.proof,
            prompt_ids: None,
        };
        run.write_json(&args.out, &out)?;
        run.finish(&args.out)?;
        return Ok(());
    }

    let corpus = args
        .corpus
        .as_ref()
        .expect("clap requires corpus or problem");
    let n = n.ok_or_else(|| invalid("--n is required (or sample.n in the config)"))?;
    let prompts: Vec<Prompt> = run.jsonl(corpus)?;
    let dims: Vec<Dimension> = match (&args.dimensions, args.infer_dimensions) {
        (Some(path), _) => run.json(path)?,
        (None, true) => MembershipMatrices::infer_dimensions(&prompts),
        (None, false) => default_dimensions(),
    };
    let b = MembershipMatrices::from_prompts(&prompts, &dims)?;
    let ids: Vec<String> = prompts.iter().map(|p| p.prompt_id.clone()).collect();

    let sel = match &args.variances {
        Some(path) => {
            let top_k = top_k.ok_or_else(|| invalid("--top-k is required with --variances"))?;
            let records: Vec<PromptVariance> = run.jsonl(path)?;
            let variances: HashMap<String, f64> = records
                .into_iter()
                .map(|r| (r.prompt_id, r.sigma))
                .collect();
            variance_ranked_select(&ids, &b, &variances, top_k, n, mode)?.selection
        }
        None => {
            let d = build_targets(&b, n)?;
            shape(&b, &d, mode)?
        }
    };

    let chosen_ids: Vec<String> = sel.chosen.iter().map(|&j| ids[j].clone()).collect();
    let out = SelectionOut {
        chosen: &sel.chosen,
        objective: sel.objective,
        proof: sel.proof,
        prompt_ids: Some(chosen_ids),
    };
    run.write_json(&args.out, &out)?;
    if let Some(path) = &args.subset_out {
        let subset: Vec<&Prompt> = sel.chosen.iter().map(|&j| &prompts[j]).collect();
        run.write_jsonl(path, &subset)?;
    }
    run.finish(&args.out)?;
    Ok(())
}
