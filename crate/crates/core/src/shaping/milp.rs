use super::problem::{MembershipMatrices, TargetDistribution};
use super::ShapingError;

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            columns: vec![Vec::new(); cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// Adds `value` at `(row, col)`. Entries must be pushed in ascending
    /// row order within a column.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows);
        debug_assert!(self.columns[col].last().is_none_or(|(r, _)| *r < row));
        self.columns[col].push((row, value));
    }

    pub fn column(&self, col: usize) -> &[(usize, f64)] {
        &self.columns[col]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col]
            .binary_search_by_key(&row, |(r, _)| *r)
            .map(|i| self.columns[col][i].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols()]; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                out[r][c] = v;
            }
        }
        out
    }
}

/// The data-shaping program `min c'x~ s.t. A x~ <= b`, where
/// `x~ = [x; z_1; ...; z_M]`, `x` binary of length `K` and the `z_m`
/// nonnegative continuous auxiliaries linearizing the L1 deviations.
///
/// Row layout: `1'x <= N`, `-1'x <= -N`, then `B^m x - z_m <= N D_m` for all
/// dimensions, then `-B^m x - z_m <= -N D_m` for all dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub binary_vars: Vec<usize>,
    pub continuous_vars: Vec<usize>,
    /// Category count per dimension (`H_m`).
    pub dimension_sizes: Vec<usize>,
}

impl MilpInstance {
    pub fn sample_count(&self) -> usize {
        self.binary_vars.len()
    }

    pub fn aux_count(&self) -> usize {
        self.continuous_vars.len()
    }

    /// Selection size `N`, read from the first cardinality row.
    pub fn select_count(&self) -> usize {
        self.b[0].round() as usize
    }

    /// Scaled targets `N D`, one per auxiliary, read from the `B x - z` rows.
    pub fn scaled_targets(&self) -> &[f64] {
        &self.b[2..2 + self.aux_count()]
    }

    /// Recovers the membership matrices and targets the instance encodes.
    pub fn to_problem(&self) -> Result<(MembershipMatrices, TargetDistribution), ShapingError> {
        let k = self.sample_count();
        let n = self.select_count();
        let mut b = MembershipMatrices::new(k);
        let mut offset = 0;
        let mut ratios = Vec::with_capacity(self.dimension_sizes.len());
        for (m, &h) in self.dimension_sizes.iter().enumerate() {
            let mut members = vec![Vec::new(); h];
            for j in 0..k {
                for &(r, v) in self.a.column(j) {
                    let row = r.wrapping_sub(2);
                    if row >= offset && row < offset + h && v > 0.5 {
                        members[row - offset].push(j);
                    }
                }
            }
            let categories = (0..h).map(|i| i.to_string()).collect();
            b.push_dimension(format!("dim{m}"), categories, members)?;
            let scale = if n == 0 { 1.0 } else { n as f64 };
            ratios.push(
                self.b[2 + offset..2 + offset + h]
                    .iter()
                    .map(|t| t / scale)
                    .collect(),
            );
            offset += h;
        }
        Ok((b, TargetDistribution { ratios, n }))
    }

    /// Objective of a binary `x` with tight auxiliaries: each `z` takes the
    /// smallest value its rows allow.
    pub fn objective_of(&self, chosen: &[usize]) -> f64 {
        let h = self.aux_count();
        let mut counts = vec![0.0; h];
        for &j in chosen {
            for &(r, v) in self.a.column(j) {
                if r >= 2 && r < 2 + h {
                    counts[r - 2] += v;
                }
            }
        }
        super::problem::deviation(&counts, self.scaled_targets())
    }
}

/// Assembles the block program from memberships and targets.
pub fn assemble_milp(
    b: &MembershipMatrices,
    targets: &TargetDistribution,
) -> Result<MilpInstance, ShapingError> {
    targets.check_against(b)?;
    let k = b.sample_count();
    let h = b.row_count();
    let n = targets.n as f64;
    let rows = 2 + 2 * h;
    let cols = k + h;

    let mut a = SparseMatrix::new(rows, cols);
    for j in 0..k {
        a.push(0, j, 1.0);
        a.push(1, j, -1.0);
        let col = b.column(j);
        for &g in col {
            a.push(2 + g, j, 1.0);
        }
        for &g in col {
            a.push(2 + h + g, j, -1.0);
        }
    }
    for g in 0..h {
        a.push(2 + g, k + g, -1.0);
        a.push(2 + h + g, k + g, -1.0);
    }

    let scaled = targets.scaled();
    let mut rhs = Vec::with_capacity(rows);
    rhs.push(n);
    rhs.push(-n);
    rhs.extend(scaled.iter().copied());
    rhs.extend(scaled.iter().map(|t| -t));

    let mut c = vec![0.0; k];
    c.extend(std::iter::repeat_n(1.0, h));

    Ok(MilpInstance {
        c,
        a,
        b: rhs,
        binary_vars: (0..k).collect(),
        continuous_vars: (k..k + h).collect(),
        dimension_sizes: b.dimensions().iter().map(|d| d.category_count()).collect(),
    })
}
