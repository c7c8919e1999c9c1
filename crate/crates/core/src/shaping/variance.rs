use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{build_targets, shape, MembershipMatrices, Selection, ShapingError, SolveMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSelection {
    /// Chosen prompt ids in ascending column order.
    pub prompt_ids: Vec<String>,
    /// Indices into the full column set.
    pub selection: Selection,
}

/// Keeps the `top_k` prompts with the highest variance (ties by id), then
/// shapes them down to `final_n` with uniform targets.
///
/// `prompt_ids[j]` names column `j` of `b`.
pub fn variance_ranked_select(
    prompt_ids: &[String],
    b: &MembershipMatrices,
    variances: &HashMap<String, f64>,
    top_k: usize,
    final_n: usize,
    mode: SolveMode,
) -> Result<RankedSelection, ShapingError> {
    if prompt_ids.len() != b.sample_count() {
        return Err(ShapingError::Shape(format!(
            "{} prompt ids for {} columns",
            prompt_ids.len(),
            b.sample_count()
        )));
    }
    if top_k > prompt_ids.len() {
        return Err(ShapingError::InsufficientPrompts {
            needed: top_k,
            available: prompt_ids.len(),
        });
    }
    if final_n > top_k || final_n == 0 {
        return Err(ShapingError::InvalidSize {
            n: final_n,
            k: top_k,
        });
    }
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(prompt_ids.len());
    for (j, id) in prompt_ids.iter().enumerate() {
        let v = *variances
            .get(id)
            .ok_or_else(|| ShapingError::MissingVariance(id.clone()))?;
        if !v.is_finite() {
            return Err(ShapingError::MissingVariance(id.clone()));
        }
        ranked.push((v, j));
    }
    ranked.sort_by(|(va, ja), (vb, jb)| {
        vb.total_cmp(va)
            .then_with(|| prompt_ids[*ja].cmp(&prompt_ids[*jb]))
    });
    let mut top: Vec<usize> = ranked[..top_k].iter().map(|&(_, j)| j).collect();
    top.sort_unstable();

    let restricted = b.restrict(&top)?;
    let targets = build_targets(&restricted, final_n)?;
    let inner = shape(&restricted, &targets, mode)?;
    let chosen: Vec<usize> = inner.chosen.iter().map(|&i| top[i]).collect();
    Ok(RankedSelection {
        prompt_ids: chosen.iter().map(|&j| prompt_ids[j].clone()).collect(),
        selection: Selection {
            chosen,
            objective: inner.objective,
            proof: inner.proof,
        },
    })
}
