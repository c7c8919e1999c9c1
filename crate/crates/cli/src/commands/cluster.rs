use std::collections::BTreeSet;

use anyhow::Result;
use serde_json::json;

use musebench::cluster::{
    ClusterModel, Distance, EmbeddingRecord, KmeansOptions, DEFAULT_K, DEFAULT_MAX_ITERS,
};
use musebench::model::Prompt;

use super::resolve;
use crate::config::ClusterSection;
use crate::error::invalid;
use crate::run::Run;
use crate::ClusterArgs;

pub const SEMANTIC_DIMENSION: &str = "semantic";

pub fn run(args: &ClusterArgs, cfg: &ClusterSection) -> Result<()> {
    let options = KmeansOptions {
        k: resolve(args.k, cfg.k, DEFAULT_K),
        seed: resolve(args.seed, cfg.seed, 0),
        max_iters: resolve(args.max_iters, cfg.max_iters, DEFAULT_MAX_ITERS),
        distance: if args.cosine || cfg.cosine.unwrap_or(false) {
            Distance::Cosine
        } else {
            Distance::Euclidean
        },
    };
    let settings = json!({
        "k": options.k,
        "seed": options.seed,
        "max_iters": options.max_iters,
        "distance": options.distance,
    });
    let mut inputs = vec![args.embeddings.as_path()];
    inputs.extend(args.prompts.as_deref());
    let mut run = Run::new("cluster", settings, &inputs)?;
    let mut outputs = vec![args.out.as_path()];
    outputs.extend(args.labeled_out.as_deref());
    run.check_outputs(&outputs)?;

    let records: Vec<EmbeddingRecord> = run.jsonl(&args.embeddings)?;
    let model = ClusterModel::fit(&records, &options)?;

    let labeled = match &args.prompts {
        Some(path) => {
            let labels = model.labels();
            let mut prompts: Vec<Prompt> = run.jsonl(path)?;
            for p in &mut prompts {
                let label = labels
                    .get(&p.prompt_id)
                    .ok_or_else(|| invalid(format!("prompt `{}` has no embedding", p.prompt_id)))?;
                p.categories.insert(
                    SEMANTIC_DIMENSION.to_string(),
                    BTreeSet::from([label.clone()]),
                );
            }
            Some(prompts)
        }
        None => None,
    };

    run.write_json(&args.out, &model)?;
    if let (Some(path), Some(prompts)) = (&args.labeled_out, labeled) {
        run.write_jsonl(path, &prompts)?;
    }
    run.finish(&args.out)?;
    Ok(())
}
