//! Dense-tableau bounded-variable primal simplex.
//!
//! Solves `min c'x  s.t.  A x <= b,  l <= x <= u` with finite lower bounds.
//! Each row gets a slack; rows whose residual at `x = l` is negative get an
//! artificial variable and a phase-one objective. Nonbasic variables sit at
//! either bound, so bound flips replace pivots when a variable's own range
//! is the tightest limit. Dantzig pricing is used until a run of degenerate
//! pivots is seen, at which point Bland's rule takes over until progress
//! resumes.

use super::milp::SparseMatrix;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<'a> {
    pub c: &'a [f64],
    pub a: &'a SparseMatrix,
    pub b: &'a [f64],
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major `m x n` matrix `B^-1 [A | I | -E]`.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            self.lower[j]
        }
    }

    fn value(&self, j: usize) -> f64 {
        match self.basic_row[j] {
            Some(i) => self.beta[i],
            None => self.nonbasic_value(j),
        }
    }

    fn recompute_reduced(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.n..(i + 1) * self.n];
                for (d, a) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
    }

    fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.value(j)).sum()
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if self.basic_row[j].is_some() || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let d = self.reduced[j];
            let improving = if self.at_upper[j] {
                d > OPT_TOL
            } else {
                d < -OPT_TOL
            };
            if !improving {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, s)| d.abs() > s) {
                best = Some((j, d.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Runs simplex iterations on the current cost vector.
    fn optimize(&mut self, max_pivots: usize) -> Result<(), LpStatus> {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let Some(j) = self.choose_entering(bland) else {
                return Ok(());
            };
            if self.pivots >= max_pivots {
                return Err(LpStatus::IterationLimit);
            }
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // Ratio test over basic variables.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let alpha = self.t[i * self.n + j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = dir * alpha;
                let bv = self.basis[i];
                let limit = if rate > 0.0 {
                    (self.beta[i] - self.lower[bv]) / rate
                } else if self.upper[bv].is_finite() {
                    (self.upper[bv] - self.beta[i]) / -rate
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        if limit < best - 1e-12 {
                            true
                        } else if limit <= best + 1e-12 {
                            if bland {
                                bv < self.basis[r]
                            } else {
                                alpha.abs() > self.t[r * self.n + j].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, limit));
                }
            }

            let flip = self.upper[j] - self.lower[j];
            let theta = match leave {
                Some((_, limit)) if limit < flip => limit,
                _ if flip.is_finite() => {
                    // The entering variable reaches its other bound first.
                    for i in 0..self.m {
                        self.beta[i] -= dir * self.t[i * self.n + j] * flip;
                    }
                    self.at_upper[j] = !self.at_upper[j];
                    self.pivots += 1;
                    degenerate_run = 0;
                    continue;
                }
                _ => return Err(LpStatus::Unbounded),
            };
            let (r, _) = leave.expect("finite theta implies a leaving row");

            let entering_value = self.nonbasic_value(j) + dir * theta;
            for i in 0..self.m {
                self.beta[i] -= dir * self.t[i * self.n + j] * theta;
            }
            let leaving = self.basis[r];
            let rate = dir * self.t[r * self.n + j];
            self.at_upper[leaving] = rate < 0.0;
            self.basic_row[leaving] = None;
            self.basis[r] = j;
            self.basic_row[j] = Some(r);
            self.beta[r] = entering_value;
            self.pivot(r, j);
            self.pivots += 1;

            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let inv = 1.0 / self.t[r * n + j];
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v *= inv;
        }
        self.t[r * n + j] = 1.0;
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.t[i * n + j];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[j] = 0.0;
        }
        let dj = self.reduced[j];
        if dj != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= dj * p;
            }
            self.reduced[j] = 0.0;
        }
    }
}

/// Solves the LP, returning an optimal vertex or the reason none exists.
pub fn solve_lp(problem: &LpProblem<'_>, max_pivots: usize) -> Result<LpSolution, LpStatus> {
    let m = problem.a.rows();
    let ns = problem.a.cols();
    assert_eq!(problem.c.len(), ns);
    assert_eq!(problem.b.len(), m);
    assert_eq!(problem.lower.len(), ns);
    assert_eq!(problem.upper.len(), ns);
    assert!(problem.lower.iter().all(|l| l.is_finite()));

    if problem.lower.iter().zip(&problem.upper).any(|(l, u)| l > u) {
        return Err(LpStatus::Infeasible);
    }

    // Residual of each row with structurals at their lower bounds.
    let mut residual = problem.b.to_vec();
    for j in 0..ns {
        let l = problem.lower[j];
        if l != 0.0 {
            for &(r, v) in problem.a.column(j) {
                residual[r] -= v * l;
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| residual[i] < 0.0).collect();
    let n = ns + m + artificial_rows.len();

    let mut sign = vec![1.0; m];
    for &i in &artificial_rows {
        sign[i] = -1.0;
    }
    let mut t = vec![0.0; m * n];
    for j in 0..ns {
        for &(r, v) in problem.a.column(j) {
            t[r * n + j] = sign[r] * v;
        }
    }
    for i in 0..m {
        t[i * n + ns + i] = sign[i];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| ns + i).collect();
    for (k, &i) in artificial_rows.iter().enumerate() {
        let col = ns + m + k;
        t[i * n + col] = 1.0;
        basis[i] = col;
    }
    let beta: Vec<f64> = (0..m).map(|i| sign[i] * residual[i]).collect();
    let mut basic_row = vec![None; n];
    for (i, &v) in basis.iter().enumerate() {
        basic_row[v] = Some(i);
    }

    let mut lower = problem.lower.clone();
    lower.resize(n, 0.0);
    let mut upper = problem.upper.clone();
    upper.resize(ns + m, f64::INFINITY);
    upper.resize(n, f64::INFINITY);

    let mut cost = vec![0.0; n];
    for c in &mut cost[ns + m..] {
        *c = 1.0;
    }

    let mut tab = Tableau {
        m,
        n,
        t,
        beta,
        basis,
        basic_row,
        lower,
        upper,
        at_upper: vec![false; n],
        reduced: vec![0.0; n],
        cost,
        pivots: 0,
    };

    if !artificial_rows.is_empty() {
        tab.recompute_reduced();
        tab.optimize(max_pivots)?;
        let infeasibility: f64 = (ns + m..n).map(|j| tab.value(j)).sum();
        if infeasibility > FEAS_TOL * (1.0 + problem.b.iter().map(|v| v.abs()).fold(0.0, f64::max))
        {
            return Err(LpStatus::Infeasible);
        }
        // Pin artificials at zero; basic ones leave on later degenerate pivots.
        for j in ns + m..n {
            tab.upper[j] = 0.0;
            if let Some(i) = tab.basic_row[j] {
                tab.beta[i] = 0.0;
            }
        }
    }

    for (j, c) in tab.cost.iter_mut().enumerate() {
        *c = if j < ns { problem.c[j] } else { 0.0 };
    }
    tab.recompute_reduced();
    tab.optimize(max_pivots)?;

    let x: Vec<f64> = (0..ns).map(|j| tab.value(j)).collect();
    let objective = tab.objective();
    Ok(LpSolution {
        x,
        objective,
        pivots: tab.pivots,
    })
}
