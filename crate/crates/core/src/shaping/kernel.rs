use std::collections::BTreeMap;

use super::milp::MilpInstance;
use super::problem::{check_size, deviation, MembershipMatrices, TargetDistribution};
use super::ShapingError;

/// Solver-facing view of a shaping problem: each sample's global rows and
/// the scaled targets `N D`.
#[derive(Debug, Clone)]
pub(crate) struct ShapeKernel {
    pub k: usize,
    pub n: usize,
    pub columns: Vec<Vec<usize>>,
    pub targets: Vec<f64>,
}

/// Samples with identical membership columns.
#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    pub rows: Vec<usize>,
    /// Member sample indices, ascending.
    pub members: Vec<usize>,
}

impl ShapeKernel {
    pub fn from_problem(
        b: &MembershipMatrices,
        d: &TargetDistribution,
    ) -> Result<Self, ShapingError> {
        d.check_against(b)?;
        Ok(ShapeKernel {
            k: b.sample_count(),
            n: d.n,
            columns: (0..b.sample_count())
                .map(|j| b.column(j).to_vec())
                .collect(),
            targets: d.scaled(),
        })
    }

    pub fn from_instance(inst: &MilpInstance) -> Result<Self, ShapingError> {
        let k = inst.sample_count();
        let h = inst.aux_count();
        let layout_ok = inst.a.rows() == 2 + 2 * h
            && inst.a.cols() == k + h
            && inst.b.len() == 2 + 2 * h
            && inst.c.len() == k + h
            && inst.binary_vars.iter().copied().eq(0..k)
            && inst.continuous_vars.iter().copied().eq(k..k + h)
            && inst.dimension_sizes.iter().sum::<usize>() == h;
        if !layout_ok {
            return Err(ShapingError::Shape(
                "instance does not follow the shaping block layout".into(),
            ));
        }
        let columns = (0..k)
            .map(|j| {
                inst.a
                    .column(j)
                    .iter()
                    .filter(|(r, v)| *r >= 2 && *r < 2 + h && *v > 0.5)
                    .map(|(r, _)| r - 2)
                    .collect()
            })
            .collect();
        Ok(ShapeKernel {
            k,
            n: inst.select_count(),
            columns,
            targets: inst.scaled_targets().to_vec(),
        })
    }

    pub fn check_size(&self) -> Result<(), ShapingError> {
        check_size(self.k, self.n)
    }

    pub fn counts(&self, chosen: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.targets.len()];
        for &j in chosen {
            for &g in &self.columns[j] {
                counts[g] += 1.0;
            }
        }
        counts
    }

    pub fn objective(&self, chosen: &[usize]) -> f64 {
        deviation(&self.counts(chosen), &self.targets)
    }

    /// Groups samples by identical columns, ordered by lowest member.
    pub fn patterns(&self) -> Vec<Pattern> {
        let mut index: BTreeMap<&[usize], usize> = BTreeMap::new();
        let mut out: Vec<Pattern> = Vec::new();
        for (j, col) in self.columns.iter().enumerate() {
            match index.get(col.as_slice()) {
                Some(&p) => out[p].members.push(j),
                None => {
                    index.insert(col, out.len());
                    out.push(Pattern {
                        rows: col.clone(),
                        members: vec![j],
                    });
                }
            }
        }
        out
    }
}
