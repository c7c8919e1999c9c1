use super::kernel::ShapeKernel;
use super::problem::{MembershipMatrices, TargetDistribution};
use super::{Proof, Selection, ShapingError};

/// Default subset-enumeration cap.
pub const DEFAULT_ORACLE_CAP: u128 = 2_000_000;

/// `C(k, n)`, saturating at `u128::MAX`.
pub fn binomial(k: usize, n: usize) -> u128 {
    if n > k {
        return 0;
    }
    let n = n.min(k - n);
    let mut acc: u128 = 1;
    for i in 0..n {
        // acc * (k - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((k - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Global optimum by enumerating every `N`-subset in lexicographic order;
/// the first subset reaching the minimum wins ties.
pub fn exhaustive_oracle(
    b: &MembershipMatrices,
    d: &TargetDistribution,
) -> Result<Selection, ShapingError> {
    exhaustive_oracle_capped(b, d, DEFAULT_ORACLE_CAP)
}

pub fn exhaustive_oracle_capped(
    b: &MembershipMatrices,
    d: &TargetDistribution,
    cap: u128,
) -> Result<Selection, ShapingError> {
    let kernel = ShapeKernel::from_problem(b, d)?;
    kernel.check_size()?;
    let subsets = binomial(kernel.k, kernel.n);
    if subsets > cap {
        return Err(ShapingError::OracleTooLarge { subsets, cap });
    }
    let mut search = Search {
        kernel: &kernel,
        counts: vec![0.0; kernel.targets.len()],
        current: Vec::with_capacity(kernel.n),
        best: None,
    };
    search.descend(0);
    let (objective, chosen) = search.best.expect("at least one subset exists");
    Ok(Selection {
        chosen,
        objective,
        proof: Proof::Optimal,
    })
}

struct Search<'a> {
    kernel: &'a ShapeKernel,
    counts: Vec<f64>,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, start: usize) {
        let need = self.kernel.n - self.current.len();
        if need == 0 {
            let value = super::problem::deviation(&self.counts, &self.kernel.targets);
            if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
                self.best = Some((value, self.current.clone()));
            }
            return;
        }
        for j in start..=self.kernel.k - need {
            for &g in &self.kernel.columns[j] {
                self.counts[g] += 1.0;
            }
            self.current.push(j);
            self.descend(j + 1);
            self.current.pop();
            for &g in &self.kernel.columns[j] {
                self.counts[g] -= 1.0;
            }
        }
    }
}
