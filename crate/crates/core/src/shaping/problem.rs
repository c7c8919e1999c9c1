use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ShapingError;
use crate::model::{Dimension, Prompt};

/// Membership of every sample in the categories of one dimension, stored as
/// one sorted member list per category (a sparse binary `H x K` matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionMembership {
    pub name: String,
    pub categories: Vec<String>,
    members: Vec<Vec<usize>>,
}

impl DimensionMembership {
    pub fn category_count(&self) -> usize {
        self.members.len()
    }

    /// Sample indices belonging to category `i`, ascending.
    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    pub fn label_count(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

/// The binary membership matrices of all dimensions over `K` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrices {
    k: usize,
    dims: Vec<DimensionMembership>,
    /// For each sample, the global row indices (dimension-major) it sets.
    columns: Vec<Vec<usize>>,
}

impl MembershipMatrices {
    pub fn new(k: usize) -> Self {
        MembershipMatrices {
            k,
            dims: Vec::new(),
            columns: vec![Vec::new(); k],
        }
    }

    /// Appends a dimension given per-category member lists. Lists are sorted
    /// and deduplicated; indices must be below `K`.
    pub fn push_dimension(
        &mut self,
        name: impl Into<String>,
        categories: Vec<String>,
        mut members: Vec<Vec<usize>>,
    ) -> Result<(), ShapingError> {
        let name = name.into();
        if categories.len() != members.len() {
            return Err(ShapingError::Shape(format!(
                "dimension `{name}` names {} categories but has {} member lists",
                categories.len(),
                members.len()
            )));
        }
        let base = self.row_count();
        for (i, list) in members.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if let Some(&bad) = list.iter().find(|&&j| j >= self.k) {
                return Err(ShapingError::Shape(format!(
                    "dimension `{name}` category {i} references sample {bad} but K = {}",
                    self.k
                )));
            }
            for &j in list.iter() {
                self.columns[j].push(base + i);
            }
        }
        self.dims.push(DimensionMembership {
            name,
            categories,
            members,
        });
        Ok(())
    }

    /// Appends a dimension from a dense `H x K` 0/1 matrix.
    pub fn push_dense(
        &mut self,
        name: impl Into<String>,
        rows: &[Vec<u8>],
    ) -> Result<(), ShapingError> {
        let name = name.into();
        let mut members = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != self.k {
                return Err(ShapingError::Shape(format!(
                    "dimension `{name}` row {i} has {} columns, expected {}",
                    row.len(),
                    self.k
                )));
            }
            let mut list = Vec::new();
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => list.push(j),
                    other => {
                        return Err(ShapingError::Shape(format!(
                            "dimension `{name}` entry ({i}, {j}) is {other}, not 0 or 1"
                        )))
                    }
                }
            }
            members.push(list);
        }
        let categories = (0..rows.len()).map(|i| i.to_string()).collect();
        self.push_dimension(name, categories, members)
    }

    /// Builds memberships from prompt category labels. Column `j` is
    /// `prompts[j]`; dimensions and category order follow `dimensions`.
    pub fn from_prompts(
        prompts: &[Prompt],
        dimensions: &[Dimension],
    ) -> Result<Self, ShapingError> {
        let mut b = MembershipMatrices::new(prompts.len());
        for dim in dimensions {
            let index: BTreeMap<&str, usize> = dim
                .categories
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i))
                .collect();
            let mut members = vec![Vec::new(); dim.categories.len()];
            for (j, prompt) in prompts.iter().enumerate() {
                for cat in prompt.categories.get(&dim.name).into_iter().flatten() {
                    let i = index.get(cat.as_str()).ok_or_else(|| {
                        ShapingError::Shape(format!(
                            "prompt `{}` has category `{cat}` not declared for dimension `{}`",
                            prompt.prompt_id, dim.name
                        ))
                    })?;
                    members[*i].push(j);
                }
            }
            b.push_dimension(dim.name.clone(), dim.categories.clone(), members)?;
        }
        Ok(b)
    }

    /// Infers dimensions from the labels present in `prompts`: dimension
    /// names and category names in sorted order.
    pub fn infer_dimensions(prompts: &[Prompt]) -> Vec<Dimension> {
        let mut dims: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for prompt in prompts {
            for (name, cats) in &prompt.categories {
                dims.entry(name)
                    .or_default()
                    .extend(cats.iter().map(String::as_str));
            }
        }
        dims.into_iter()
            .map(|(name, cats)| Dimension {
                name: name.to_string(),
                categories: cats.into_iter().map(str::to_string).collect(),
            })
            .collect()
    }

    pub fn sample_count(&self) -> usize {
        self.k
    }

    pub fn dimensions(&self) -> &[DimensionMembership] {
        &self.dims
    }

    /// Total category count across dimensions (`sum H_m`).
    pub fn row_count(&self) -> usize {
        self.dims
            .iter()
            .map(DimensionMembership::category_count)
            .sum()
    }

    /// Global rows set by sample `j`, ascending.
    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn entry(&self, dim: usize, category: usize, sample: usize) -> bool {
        self.dims[dim].members[category]
            .binary_search(&sample)
            .is_ok()
    }

    /// Keeps only the listed samples, renumbered in the given order.
    pub fn restrict(&self, samples: &[usize]) -> Result<Self, ShapingError> {
        let mut position = vec![usize::MAX; self.k];
        for (new, &old) in samples.iter().enumerate() {
            if old >= self.k || position[old] != usize::MAX {
                return Err(ShapingError::Shape(format!(
                    "invalid or repeated sample {old} in restriction"
                )));
            }
            position[old] = new;
        }
        let mut out = MembershipMatrices::new(samples.len());
        for dim in &self.dims {
            let members = dim
                .members
                .iter()
                .map(|list| {
                    list.iter()
                        .filter_map(|&j| (position[j] != usize::MAX).then_some(position[j]))
                        .collect()
                })
                .collect();
            out.push_dimension(dim.name.clone(), dim.categories.clone(), members)?;
        }
        Ok(out)
    }
}

/// Target category ratios per dimension, plus the selection size `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    pub ratios: Vec<Vec<f64>>,
    pub n: usize,
}

impl TargetDistribution {
    /// `N * D_m` flattened dimension-major, one entry per global row.
    pub fn scaled(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.ratios.iter().flatten().map(|d| n * d).collect()
    }

    pub fn check_against(&self, b: &MembershipMatrices) -> Result<(), ShapingError> {
        if self.ratios.len() != b.dimensions().len() {
            return Err(ShapingError::Shape(format!(
                "targets cover {} dimensions, memberships {}",
                self.ratios.len(),
                b.dimensions().len()
            )));
        }
        for (d, dim) in self.ratios.iter().zip(b.dimensions()) {
            if d.len() != dim.category_count() {
                return Err(ShapingError::Shape(format!(
                    "dimension `{}` has {} categories but {} target ratios",
                    dim.name,
                    dim.category_count(),
                    d.len()
                )));
            }
            if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(ShapingError::Shape(format!(
                    "dimension `{}` has a negative or non-finite target",
                    dim.name
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_size(k: usize, n: usize) -> Result<(), ShapingError> {
    if n == 0 || n > k {
        return Err(ShapingError::InvalidSize { n, k });
    }
    Ok(())
}

/// Uniform targets: every category of dimension `m` gets `R_m / H_m`, where
/// `R_m` is the mean number of labels per sample in that dimension.
pub fn build_targets(b: &MembershipMatrices, n: usize) -> Result<TargetDistribution, ShapingError> {
    check_size(b.sample_count(), n)?;
    let k = b.sample_count() as f64;
    let ratios = b
        .dimensions()
        .iter()
        .map(|dim| {
            let h = dim.category_count();
            let per_category = (dim.label_count() as f64 / k) / h as f64;
            vec![per_category; h]
        })
        .collect();
    Ok(TargetDistribution { ratios, n })
}

/// Category counts of a selection, one per global row.
pub(crate) fn counts_of(b: &MembershipMatrices, chosen: &[usize]) -> Vec<f64> {
    let mut counts = vec![0.0; b.row_count()];
    for &j in chosen {
        for &g in b.column(j) {
            counts[g] += 1.0;
        }
    }
    counts
}

/// Decimal resolution of reported objectives.
pub const OBJECTIVE_DECIMALS: i32 = 9;

/// `sum_g |count_g - target_g|`, rounded to [`OBJECTIVE_DECIMALS`] places so
/// that subsets with the same deviation report bit-identical objectives.
pub(crate) fn deviation(counts: &[f64], scaled_targets: &[f64]) -> f64 {
    let raw: f64 = counts
        .iter()
        .zip(scaled_targets)
        .map(|(c, t)| (c - t).abs())
        .sum();
    let scale = 10f64.powi(OBJECTIVE_DECIMALS);
    (raw * scale).round() / scale
}

pub(crate) fn check_chosen(k: usize, n: usize, chosen: &[usize]) -> Result<(), ShapingError> {
    if chosen.len() != n {
        return Err(ShapingError::Cardinality {
            expected: n,
            got: chosen.len(),
        });
    }
    let mut seen = vec![false; k];
    for &j in chosen {
        if j >= k || std::mem::replace(&mut seen[j], true) {
            return Err(ShapingError::Shape(format!(
                "chosen index {j} is out of range or repeated"
            )));
        }
    }
    Ok(())
}

/// L1 deviation of a selection's category counts from `N * D`.
pub fn evaluate_objective(
    b: &MembershipMatrices,
    targets: &TargetDistribution,
    chosen: &[usize],
) -> Result<f64, ShapingError> {
    targets.check_against(b)?;
    check_chosen(b.sample_count(), targets.n, chosen)?;
    Ok(deviation(&counts_of(b, chosen), &targets.scaled()))
}
