use std::collections::BTreeSet;

use super::kernel::{Pattern, ShapeKernel};
use super::problem::{MembershipMatrices, TargetDistribution};
use super::{Proof, Selection, ShapingError};

/// Greedy insertion followed by best-improvement 1-swap local search.
///
/// Each insertion adds the sample with the smallest objective increase; each
/// swap pass applies the single exchange with the largest decrease, until no
/// exchange improves. Ties go to the lowest sample index (lexicographically
/// lowest `(removed, added)` pair for swaps).
pub fn greedy_shape(
    b: &MembershipMatrices,
    d: &TargetDistribution,
) -> Result<Selection, ShapingError> {
    let kernel = ShapeKernel::from_problem(b, d)?;
    greedy_kernel(&kernel)
}

pub(crate) fn greedy_kernel(kernel: &ShapeKernel) -> Result<Selection, ShapingError> {
    kernel.check_size()?;
    let patterns = kernel.patterns();
    let mut state = State::new(kernel, &patterns);
    for _ in 0..kernel.n {
        state.insert_best();
    }
    while state.swap_best() {}
    let mut chosen: Vec<usize> = state
        .selected
        .iter()
        .flat_map(|s| s.iter().copied())
        .collect();
    chosen.sort_unstable();
    let objective = kernel.objective(&chosen);
    Ok(Selection {
        chosen,
        objective,
        proof: Proof::Heuristic,
    })
}

struct State<'a> {
    targets: &'a [f64],
    patterns: &'a [Pattern],
    counts: Vec<f64>,
    selected: Vec<BTreeSet<usize>>,
    unselected: Vec<BTreeSet<usize>>,
}

impl<'a> State<'a> {
    fn new(kernel: &'a ShapeKernel, patterns: &'a [Pattern]) -> Self {
        State {
            targets: &kernel.targets,
            patterns,
            counts: vec![0.0; kernel.targets.len()],
            selected: vec![BTreeSet::new(); patterns.len()],
            unselected: patterns
                .iter()
                .map(|p| p.members.iter().copied().collect())
                .collect(),
        }
    }

    fn inc(&self, g: usize) -> f64 {
        let (c, t) = (self.counts[g], self.targets[g]);
        (c + 1.0 - t).abs() - (c - t).abs()
    }

    fn dec(&self, g: usize) -> f64 {
        let (c, t) = (self.counts[g], self.targets[g]);
        (c - 1.0 - t).abs() - (c - t).abs()
    }

    fn insert_best(&mut self) {
        let mut best: Option<(f64, usize, usize)> = None;
        for (p, pattern) in self.patterns.iter().enumerate() {
            let Some(&rep) = self.unselected[p].first() else {
                continue;
            };
            let delta: f64 = pattern.rows.iter().map(|&g| self.inc(g)).sum();
            if best.is_none_or(|(bd, _, bj)| prefer(delta, bd, rep < bj)) {
                best = Some((delta, p, rep));
            }
        }
        let (_, p, j) = best.expect("N <= K leaves a sample to insert");
        self.move_in(p, j);
    }

    fn move_in(&mut self, p: usize, j: usize) {
        self.unselected[p].remove(&j);
        self.selected[p].insert(j);
        for &g in &self.patterns[p].rows {
            self.counts[g] += 1.0;
        }
    }

    fn move_out(&mut self, p: usize, j: usize) {
        self.selected[p].remove(&j);
        self.unselected[p].insert(j);
        for &g in &self.patterns[p].rows {
            self.counts[g] -= 1.0;
        }
    }

    /// Applies the best improving swap; returns false at a local optimum.
    fn swap_best(&mut self) -> bool {
        let inc: Vec<f64> = (0..self.counts.len()).map(|g| self.inc(g)).collect();
        let dec: Vec<f64> = (0..self.counts.len()).map(|g| self.dec(g)).collect();
        let current: f64 = self
            .counts
            .iter()
            .zip(self.targets)
            .map(|(c, t)| (c - t).abs())
            .sum();
        let tol = 1e-12 * (1.0 + current);

        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for (p, out_pat) in self.patterns.iter().enumerate() {
            let Some(&out_rep) = self.selected[p].first() else {
                continue;
            };
            for (q, in_pat) in self.patterns.iter().enumerate() {
                if p == q {
                    continue;
                }
                let Some(&in_rep) = self.unselected[q].first() else {
                    continue;
                };
                let delta = swap_delta(&out_pat.rows, &in_pat.rows, &inc, &dec);
                let better = match best {
                    None => true,
                    Some((bd, _, bi, _, bj)) => prefer(delta, bd, (out_rep, in_rep) < (bi, bj)),
                };
                if better {
                    best = Some((delta, p, out_rep, q, in_rep));
                }
            }
        }
        match best {
            Some((delta, p, i, q, j)) if delta < -tol => {
                self.move_out(p, i);
                self.move_in(q, j);
                true
            }
            _ => false,
        }
    }
}

const TIE_TOL: f64 = 1e-12;

/// Strictly smaller delta wins; deltas within rounding noise fall back to the
/// index order.
fn prefer(delta: f64, best: f64, lower_index: bool) -> bool {
    delta < best - TIE_TOL || (delta <= best + TIE_TOL && lower_index)
}

/// Objective change from dropping a sample with rows `out` and adding one
/// with rows `inn`; shared rows cancel.
fn swap_delta(out: &[usize], inn: &[usize], inc: &[f64], dec: &[f64]) -> f64 {
    let (mut a, mut b) = (0, 0);
    let mut delta = 0.0;
    while a < out.len() || b < inn.len() {
        match (out.get(a), inn.get(b)) {
            (Some(&x), Some(&y)) if x == y => {
                a += 1;
                b += 1;
            }
            (Some(&x), Some(&y)) if x < y => {
                delta += dec[x];
                a += 1;
            }
            (Some(_), Some(&y)) => {
                delta += inc[y];
                b += 1;
            }
            (Some(&x), None) => {
                delta += dec[x];
                a += 1;
            }
            (None, Some(&y)) => {
                delta += inc[y];
                b += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    delta
}
