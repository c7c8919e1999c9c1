use serde::{Deserialize, Serialize};

use super::problem::{build_targets, MembershipMatrices, TargetDistribution};
use super::ShapingError;

/// One dimension in the instance file: category names and, per category,
/// the member sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapingDimensionFile {
    pub name: String,
    pub categories: Vec<String>,
    pub members: Vec<Vec<usize>>,
}

/// JSON interchange form of a shaping problem. Targets default to the
/// uniform `R_m / H_m` ratios when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingProblemFile {
    pub k: usize,
    pub n: usize,
    pub dimensions: Vec<ShapingDimensionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Vec<f64>>>,
}

impl ShapingProblemFile {
    pub fn from_problem(b: &MembershipMatrices, d: Option<&TargetDistribution>, n: usize) -> Self {
        ShapingProblemFile {
            k: b.sample_count(),
            n,
            dimensions: b
                .dimensions()
                .iter()
                .map(|dim| ShapingDimensionFile {
                    name: dim.name.clone(),
                    categories: dim.categories.clone(),
                    members: (0..dim.category_count())
                        .map(|i| dim.members(i).to_vec())
                        .collect(),
                })
                .collect(),
            targets: d.map(|d| d.ratios.clone()),
        }
    }

    pub fn to_problem(&self) -> Result<(MembershipMatrices, TargetDistribution), ShapingError> {
        let mut b = MembershipMatrices::new(self.k);
        for dim in &self.dimensions {
            b.push_dimension(
                dim.name.clone(),
                dim.categories.clone(),
                dim.members.clone(),
            )?;
        }
        let d = match &self.targets {
            Some(ratios) => {
                super::problem::check_size(self.k, self.n)?;
                let d = TargetDistribution {
                    ratios: ratios.clone(),
                    n: self.n,
                };
                d.check_against(&b)?;
                d
            }
            None => build_targets(&b, self.n)?,
        };
        Ok((b, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"k":4,"n":2,"dimensions":[{"name":"color","categories":["red","blue"],"members":[[0,1],[3]]}]}"#;
        let file: ShapingProblemFile = serde_json::from_str(text).unwrap();
        let (b, d) = file.to_problem().unwrap();
        assert_eq!(d.ratios, vec![vec![0.375, 0.375]]);
        let back = ShapingProblemFile::from_problem(&b, None, 2);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn bad_indices_rejected() {
        let text =
            r#"{"k":2,"n":1,"dimensions":[{"name":"c","categories":["a"],"members":[[5]]}]}"#;
        let file: ShapingProblemFile = serde_json::from_str(text).unwrap();
        assert!(file.to_problem().is_err());
    }
}
