//! Best-first branch-and-bound over the shaping program.
//!
//! Binary columns with identical constraint columns are folded into one
//! integer variable bounded by the group size before searching; a folded
//! value `v` selects the `v` lowest-indexed samples of its group. Every node
//! LP is solved when the node is created, so the queue is ordered by each
//! node's own bound (ties by creation order).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::greedy::greedy_kernel;
use super::kernel::{Pattern, ShapeKernel};
use super::milp::{MilpInstance, SparseMatrix};
use super::simplex::{solve_lp, LpProblem, LpStatus};
use super::{Proof, Selection, ShapingError};

pub const DEFAULT_MAX_NODES: u64 = 1_000_000;

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BnbOptions {
    /// LP solves allowed, root included.
    pub max_nodes: u64,
    /// Seed the incumbent with the greedy selection.
    pub warm_start: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            max_nodes: DEFAULT_MAX_NODES,
            warm_start: true,
        }
    }
}

/// Fractional LP optimum and the lower bound it certifies.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRelaxation {
    pub x: Vec<f64>,
    pub bound: f64,
}

fn pivot_limit(rows: usize, cols: usize) -> usize {
    100_000 + 50 * (rows + cols)
}

fn lp_error(status: LpStatus) -> ShapingError {
    match status {
        LpStatus::Infeasible => ShapingError::Infeasible,
        other => ShapingError::Lp(format!("{other:?}")),
    }
}

/// Solves the relaxation with `x` in `[0, 1]` and `z >= 0`.
pub fn solve_lp_relaxation(inst: &MilpInstance) -> Result<LpRelaxation, ShapingError> {
    let cols = inst.a.cols();
    let mut upper = vec![f64::INFINITY; cols];
    for &j in &inst.binary_vars {
        upper[j] = 1.0;
    }
    let problem = LpProblem {
        c: &inst.c,
        a: &inst.a,
        b: &inst.b,
        lower: vec![0.0; cols],
        upper,
    };
    let sol = solve_lp(&problem, pivot_limit(inst.a.rows(), cols)).map_err(lp_error)?;
    Ok(LpRelaxation {
        x: sol.x,
        bound: sol.objective,
    })
}

/// Folded LP: one integer column per membership pattern, then the auxiliaries.
struct FoldedLp {
    c: Vec<f64>,
    a: SparseMatrix,
    b: Vec<f64>,
    upper: Vec<f64>,
    patterns: Vec<Pattern>,
}

impl FoldedLp {
    fn new(inst: &MilpInstance, kernel: &ShapeKernel) -> Self {
        let patterns = kernel.patterns();
        let p = patterns.len();
        let h = inst.aux_count();
        let mut a = SparseMatrix::new(inst.a.rows(), p + h);
        let mut c = Vec::with_capacity(p + h);
        let mut upper = Vec::with_capacity(p + h);
        for (col, pattern) in patterns.iter().enumerate() {
            let rep = pattern.members[0];
            for &(r, v) in inst.a.column(rep) {
                a.push(r, col, v);
            }
            c.push(inst.c[rep]);
            upper.push(pattern.members.len() as f64);
        }
        for (i, &j) in inst.continuous_vars.iter().enumerate() {
            for &(r, v) in inst.a.column(j) {
                a.push(r, p + i, v);
            }
            c.push(inst.c[j]);
            upper.push(f64::INFINITY);
        }
        FoldedLp {
            c,
            a,
            b: inst.b.clone(),
            upper,
            patterns,
        }
    }

    fn solve(&self, fixings: &[Fixing]) -> Result<Option<(Vec<f64>, f64)>, ShapingError> {
        let mut lower = vec![0.0_f64; self.c.len()];
        let mut upper = self.upper.clone();
        for f in fixings {
            lower[f.var] = lower[f.var].max(f.lower);
            upper[f.var] = upper[f.var].min(f.upper);
        }
        let problem = LpProblem {
            c: &self.c,
            a: &self.a,
            b: &self.b,
            lower,
            upper,
        };
        match solve_lp(&problem, pivot_limit(self.a.rows(), self.a.cols())) {
            Ok(sol) => Ok(Some((sol.x, sol.objective))),
            Err(LpStatus::Infeasible) => Ok(None),
            Err(other) => Err(lp_error(other)),
        }
    }

    /// Most fractional pattern variable, lowest index on ties.
    fn branching_var(&self, x: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, &v) in x[..self.patterns.len()].iter().enumerate() {
            let frac = v - v.floor();
            let score = frac.min(1.0 - frac);
            if score > INT_TOL && best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, v, score));
            }
        }
        best.map(|(j, v, _)| (j, v))
    }

    fn selection_of(&self, x: &[f64]) -> Vec<usize> {
        let mut chosen: Vec<usize> = self
            .patterns
            .iter()
            .zip(x)
            .flat_map(|(p, &v)| p.members[..v.round() as usize].iter().copied())
            .collect();
        chosen.sort_unstable();
        chosen
    }
}

#[derive(Debug, Clone, Copy)]
struct Fixing {
    var: usize,
    lower: f64,
    upper: f64,
}

struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<Fixing>,
    branch: (usize, f64),
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the smallest bound, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    chosen: Vec<usize>,
    objective: f64,
}

fn prune_tol(objective: f64) -> f64 {
    1e-9 * (1.0 + objective.abs())
}

/// Exact search with a node budget. Returns a proven optimum when the search
/// completes, otherwise the incumbent with its gap to the best open bound.
pub fn solve_milp(inst: &MilpInstance, options: &BnbOptions) -> Result<Selection, ShapingError> {
    let kernel = ShapeKernel::from_instance(inst)?;
    if kernel.n > kernel.k {
        return Err(ShapingError::Infeasible);
    }
    let lp = FoldedLp::new(inst, &kernel);

    let Some((root_x, root_bound)) = lp.solve(&[])? else {
        return Err(ShapingError::Infeasible);
    };
    let mut nodes: u64 = 1;

    let mut incumbent = if options.warm_start && kernel.n >= 1 {
        let greedy = greedy_kernel(&kernel)?;
        Some(Incumbent {
            chosen: greedy.chosen,
            objective: greedy.objective,
        })
    } else {
        None
    };

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut consider = |x: Vec<f64>,
                        bound: f64,
                        fixings: Vec<Fixing>,
                        heap: &mut BinaryHeap<Node>,
                        incumbent: &mut Option<Incumbent>| {
        if let Some(inc) = incumbent.as_ref() {
            if bound >= inc.objective - prune_tol(inc.objective) {
                return;
            }
        }
        match lp.branching_var(&x) {
            None => {
                let chosen = lp.selection_of(&x);
                let objective = kernel.objective(&chosen);
                if incumbent
                    .as_ref()
                    .is_none_or(|inc| objective < inc.objective)
                {
                    *incumbent = Some(Incumbent { chosen, objective });
                }
            }
            Some(branch) => {
                seq += 1;
                heap.push(Node {
                    bound,
                    seq,
                    fixings,
                    branch,
                });
            }
        }
    };
    consider(root_x, root_bound, Vec::new(), &mut heap, &mut incumbent);

    let mut exhausted = false;
    while let Some(node) = heap.pop() {
        if let Some(inc) = incumbent.as_ref() {
            if node.bound >= inc.objective - prune_tol(inc.objective) {
                heap.clear();
                break;
            }
        }
        if nodes + 2 > options.max_nodes {
            heap.push(node);
            exhausted = true;
            break;
        }
        let (var, value) = node.branch;
        let children = [
            Fixing {
                var,
                lower: 0.0,
                upper: value.floor(),
            },
            Fixing {
                var,
                lower: value.ceil(),
                upper: f64::INFINITY,
            },
        ];
        for fix in children {
            let mut fixings = node.fixings.clone();
            fixings.push(fix);
            nodes += 1;
            if let Some((x, bound)) = lp.solve(&fixings)? {
                consider(x, bound, fixings, &mut heap, &mut incumbent);
            }
        }
    }

    let Some(inc) = incumbent else {
        return Err(if exhausted {
            ShapingError::NoIncumbent { nodes }
        } else {
            ShapingError::Infeasible
        });
    };
    let proof = if exhausted {
        let best_open = heap.peek().map_or(inc.objective, |n| n.bound);
        let gap = (inc.objective - best_open).max(0.0);
        if gap <= prune_tol(inc.objective) {
            Proof::Optimal
        } else {
            Proof::BoundGap(gap)
        }
    } else {
        Proof::Optimal
    };
    Ok(Selection {
        chosen: inc.chosen,
        objective: inc.objective,
        proof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::{
        assemble_milp, build_targets, exhaustive_oracle, MembershipMatrices, TargetDistribution,
    };

    #[test]
    fn zero_deviation_subset_found_and_proven() {
        // K=6, N=3, H=2: samples 0,1 in cat 0 and samples 2,3 in cat 1;
        // 4,5 unlabeled. R = 4/6, D = 1/3 each, N*D = 1: one from each plus
        // an unlabeled sample reaches zero.
        let mut b = MembershipMatrices::new(6);
        b.push_dense("d", &[vec![1, 1, 0, 0, 0, 0], vec![0, 0, 1, 1, 0, 0]])
            .unwrap();
        let d = build_targets(&b, 3).unwrap();
        let inst = assemble_milp(&b, &d).unwrap();
        for warm_start in [true, false] {
            let sel = solve_milp(
                &inst,
                &BnbOptions {
                    warm_start,
                    ..BnbOptions::default()
                },
            )
            .unwrap();
            assert!(sel.objective.abs() < 1e-12, "{sel:?}");
            assert_eq!(sel.proof, Proof::Optimal);
            assert_eq!(sel.chosen.len(), 3);
        }
        assert_eq!(exhaustive_oracle(&b, &d).unwrap().objective, 0.0);
    }

    #[test]
    fn lp_bound_zero_when_integral_optimum_zero() {
        let mut b = MembershipMatrices::new(4);
        b.push_dense("d", &[vec![1, 1, 0, 0], vec![0, 0, 1, 1]])
            .unwrap();
        let d = build_targets(&b, 2).unwrap();
        let inst = assemble_milp(&b, &d).unwrap();
        let relax = solve_lp_relaxation(&inst).unwrap();
        assert!(relax.bound.abs() < 1e-9);
        assert_eq!(relax.x.len(), 6);
    }

    #[test]
    fn oversized_selection_is_infeasible() {
        let mut b = MembershipMatrices::new(3);
        b.push_dense("d", &[vec![1, 0, 1]]).unwrap();
        let d = TargetDistribution {
            ratios: vec![vec![0.5]],
            n: 5,
        };
        let inst = assemble_milp(&b, &d).unwrap();
        assert!(matches!(
            solve_lp_relaxation(&inst),
            Err(ShapingError::Infeasible)
        ));
        assert!(matches!(
            solve_milp(&inst, &BnbOptions::default()),
            Err(ShapingError::Infeasible)
        ));
    }

    #[test]
    fn budget_exhaustion_reports_gap_or_no_incumbent() {
        // Odd target forces fractional LP vertices.
        let mut b = MembershipMatrices::new(9);
        b.push_dense(
            "a",
            &[
                vec![1, 1, 1, 0, 0, 0, 1, 0, 1],
                vec![0, 1, 0, 1, 1, 0, 0, 1, 0],
                vec![1, 0, 0, 1, 0, 1, 1, 0, 0],
            ],
        )
        .unwrap();
        b.push_dense(
            "b",
            &[
                vec![1, 0, 1, 1, 0, 0, 1, 1, 0],
                vec![0, 1, 1, 0, 1, 1, 0, 0, 1],
            ],
        )
        .unwrap();
        let d = TargetDistribution {
            ratios: vec![vec![0.37, 0.21, 0.43], vec![0.55, 0.31]],
            n: 4,
        };
        let inst = assemble_milp(&b, &d).unwrap();
        let root = solve_lp_relaxation(&inst).unwrap();
        let tight = BnbOptions {
            max_nodes: 1,
            warm_start: true,
        };
        let sel = solve_milp(&inst, &tight).unwrap();
        let greedy = crate::shaping::greedy_shape(&b, &d).unwrap();
        assert!(sel.objective <= greedy.objective);
        match sel.proof {
            Proof::BoundGap(gap) => {
                assert!(gap > 0.0);
                assert!((sel.objective - gap - root.bound).abs() < 1e-6);
            }
            Proof::Optimal => assert!((sel.objective - root.bound).abs() < 1e-6),
            Proof::Heuristic => panic!("B&B never reports heuristic"),
        }
        let cold = BnbOptions {
            max_nodes: 1,
            warm_start: false,
        };
        match solve_milp(&inst, &cold) {
            Err(ShapingError::NoIncumbent { .. }) => {}
            Ok(sel) => assert_eq!(sel.chosen.len(), 4),
            Err(other) => panic!("unexpected {other}"),
        }
        let full = solve_milp(&inst, &BnbOptions::default()).unwrap();
        assert_eq!(full.proof, Proof::Optimal);
        assert!((full.objective - exhaustive_oracle(&b, &d).unwrap().objective).abs() < 1e-9);
    }
}
