//! Balanced subset selection.
//!
//! Picks `N` of `K` samples so the selection's category counts match target
//! counts `N * D_m` in every labeling dimension, minimizing the summed L1
//! deviation. The problem is assembled as a mixed-integer program and solved
//! by branch-and-bound over a bounded-variable simplex, with a greedy swap
//! search as warm start and an exhaustive enumerator as the test oracle.

mod bnb;
mod greedy;
mod io;
mod kernel;
mod milp;
mod oracle;
mod problem;
pub mod simplex;
mod variance;

use serde::{Deserialize, Serialize};

pub use bnb::{solve_lp_relaxation, solve_milp, BnbOptions, LpRelaxation, DEFAULT_MAX_NODES};
pub use greedy::greedy_shape;
pub use io::{ShapingDimensionFile, ShapingProblemFile};
pub use milp::{assemble_milp, MilpInstance, SparseMatrix};
pub use oracle::{binomial, exhaustive_oracle, exhaustive_oracle_capped, DEFAULT_ORACLE_CAP};
pub use problem::{
    build_targets, evaluate_objective, DimensionMembership, MembershipMatrices, TargetDistribution,
    OBJECTIVE_DECIMALS,
};
pub use variance::{variance_ranked_select, RankedSelection};

#[derive(Debug, thiserror::Error)]
pub enum ShapingError {
    #[error("cannot select {n} of {k} samples")]
    InvalidSize { n: usize, k: usize },
    #[error("selection has {got} samples, expected {expected}")]
    Cardinality { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("the program is infeasible")]
    Infeasible,
    #[error("exhaustive search over {subsets} subsets exceeds the cap of {cap}")]
    OracleTooLarge { subsets: u128, cap: u128 },
    #[error("node budget exhausted after {nodes} nodes without a feasible selection")]
    NoIncumbent { nodes: u64 },
    #[error("LP solver failure: {0}")]
    Lp(String),
    #[error("need {needed} prompts, only {available} available")]
    InsufficientPrompts { needed: usize, available: usize },
    #[error("no variance for prompt `{0}`")]
    MissingVariance(String),
}

/// How far a returned selection is known to be from optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proof {
    Optimal,
    /// Incumbent objective minus the best open LP bound.
    BoundGap(f64),
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected sample indices, ascending.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub proof: Proof,
}

/// Which solver `shape` runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// Greedy warm start, then budgeted branch-and-bound.
    Exact(BnbOptions),
    /// Full enumeration, refused above the cap.
    Oracle {
        cap: u128,
    },
    Greedy,
}

impl Default for SolveMode {
    fn default() -> Self {
        SolveMode::Exact(BnbOptions::default())
    }
}

/// Selects `d.n` samples from `b` with the requested solver.
pub fn shape(
    b: &MembershipMatrices,
    d: &TargetDistribution,
    mode: SolveMode,
) -> Result<Selection, ShapingError> {
    match mode {
        SolveMode::Exact(options) => {
            let inst = assemble_milp(b, d)?;
            solve_milp(&inst, &options)
        }
        SolveMode::Oracle { cap } => exhaustive_oracle_capped(b, d, cap),
        SolveMode::Greedy => greedy_shape(b, d),
    }
}
