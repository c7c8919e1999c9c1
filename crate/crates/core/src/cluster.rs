//! Seeded k-means over prompt embeddings.
//!
//! Initialization is k-means++ driven by a ChaCha8 stream, followed by Lloyd
//! iterations until the assignment stops changing. Distances are squared
//! Euclidean on the raw vectors unless [`Distance::Cosine`] is selected, in
//! which case vectors are scaled to unit length first.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{cluster_category, FieldError, JsonlRecord};

pub const DEFAULT_K: usize = 7;
pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("no vectors to cluster")]
    Empty,
    #[error("k must be positive")]
    ZeroK,
    #[error("vector {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("vector {0} has a non-finite component")]
    NonFinite(usize),
    #[error("vector {0} has zero length and cannot be normalized")]
    ZeroVector(usize),
    #[error("k = {k} exceeds the {distinct} distinct vectors")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("{ids} ids for {vectors} vectors")]
    IdCount { ids: usize, vectors: usize },
    #[error("duplicate prompt id `{0}`")]
    DuplicateId(String),
    #[error("prompt `{0}` has no cluster assignment")]
    Unassigned(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmeansOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub distance: Distance,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions {
            k: DEFAULT_K,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            distance: Distance::Euclidean,
        }
    }
}

/// Raw k-means result over positionally indexed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia at the end of each Lloyd iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One line of the embedding input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub prompt_id: String,
    pub vector: Vec<f64>,
}

/// Fitted clusters keyed by prompt id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: BTreeMap<String, usize>,
    pub inertia: f64,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid, lowest index on ties.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia_of(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len()
}

fn prepare(vectors: &[Vec<f64>], distance: Distance) -> Result<Vec<Vec<f64>>, ClusterError> {
    let dim = vectors.first().ok_or(ClusterError::Empty)?.len();
    let mut out = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(ClusterError::DimensionMismatch {
                index: i,
                expected: dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(i));
        }
        match distance {
            Distance::Euclidean => out.push(v.clone()),
            Distance::Cosine => {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(ClusterError::ZeroVector(i));
                }
                out.push(v.iter().map(|x| x / norm).collect());
            }
        }
    }
    Ok(out)
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut pick = d2
            .iter()
            .rposition(|&d| d > 0.0)
            .expect("a distinct point remains");
        let mut r = rng.random::<f64>() * total;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
        }
        let chosen = points[pick].clone();
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(squared_distance(p, &chosen));
        }
        centroids.push(chosen);
    }
    centroids
}

fn update_centroids(points: &[Vec<f64>], assignments: &mut [usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments.iter()) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mean = |sum: &[f64], n: usize| sum.iter().map(|s| s / n as f64).collect::<Vec<_>>();
    let mut centroids: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            if counts[c] > 0 {
                mean(&sums[c], counts[c])
            } else {
                vec![0.0; dim]
            }
        })
        .collect();

    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        // Steal the point farthest from its centroid among clusters that can spare one.
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if counts[a] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[a]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k does not exceed the point count");
        let donor = assignments[i];
        for (s, x) in sums[donor].iter_mut().zip(&points[i]) {
            *s -= x;
        }
        counts[donor] -= 1;
        centroids[donor] = mean(&sums[donor], counts[donor]);
        assignments[i] = empty;
        counts[empty] = 1;
        sums[empty] = points[i].clone();
        centroids[empty] = points[i].clone();
    }
    centroids
}

pub fn kmeans(vectors: &[Vec<f64>], options: &KmeansOptions) -> Result<KmeansFit, ClusterError> {
    if options.k == 0 {
        return Err(ClusterError::ZeroK);
    }
    let points = prepare(vectors, options.distance)?;
    let distinct = distinct_count(&points);
    if options.k > distinct {
        return Err(ClusterError::TooFewDistinct {
            k: options.k,
            distinct,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut centroids = plus_plus_init(&points, options.k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iters {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
        centroids = update_centroids(&points, &mut assignments, options.k);
        history.push(inertia_of(&points, &centroids, &assignments));
        iterations += 1;
    }
    if assignments.is_empty() {
        assignments = points.iter().map(|p| nearest(p, &centroids).0).collect();
    }
    let inertia = inertia_of(&points, &centroids, &assignments);
    Ok(KmeansFit {
        centroids,
        assignments,
        inertia,
        history,
        iterations,
        converged,
    })
}

impl ClusterModel {
    pub fn fit(records: &[EmbeddingRecord], options: &KmeansOptions) -> Result<Self, ClusterError> {
        let mut seen = BTreeSet::new();
        for r in records {
            if !seen.insert(r.prompt_id.as_str()) {
                return Err(ClusterError::DuplicateId(r.prompt_id.clone()));
            }
        }
        let vectors: Vec<Vec<f64>> = records.iter().map(|r| r.vector.clone()).collect();
        let fit = kmeans(&vectors, options)?;
        Ok(ClusterModel {
            k: options.k,
            centroids: fit.centroids,
            assignments: records
                .iter()
                .map(|r| r.prompt_id.clone())
                .zip(fit.assignments)
                .collect(),
            inertia: fit.inertia,
        })
    }

    /// One-hot `k x K` membership rows for the prompts in `prompt_ids` order.
    pub fn to_membership(&self, prompt_ids: &[String]) -> Result<Vec<Vec<u8>>, ClusterError> {
        let mut rows = vec![vec![0u8; prompt_ids.len()]; self.k];
        for (j, id) in prompt_ids.iter().enumerate() {
            let c = *self
                .assignments
                .get(id)
                .ok_or_else(|| ClusterError::Unassigned(id.clone()))?;
            rows[c][j] = 1;
        }
        Ok(rows)
    }

    /// Category name (`cluster_<i>`) for every assigned prompt.
    pub fn labels(&self) -> BTreeMap<String, String> {
        self.assignments
            .iter()
            .map(|(id, &c)| (id.clone(), cluster_category(c)))
            .collect()
    }
}

/// Membership rows for a bare assignment vector.
pub fn one_hot(assignments: &[usize], k: usize) -> Vec<Vec<u8>> {
    let mut rows = vec![vec![0u8; assignments.len()]; k];
    for (j, &c) in assignments.iter().enumerate() {
        rows[c][j] = 1;
    }
    rows
}

impl JsonlRecord for EmbeddingRecord {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if self.vector.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::new("vector", "non-finite component"));
        }
        Ok(())
    }

    fn unique_id(&self) -> Option<&str> {
        Some(&self.prompt_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(k: usize, seed: u64) -> KmeansOptions {
        KmeansOptions {
            k,
            seed,
            ..KmeansOptions::default()
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let fit = kmeans(&pts, &opts(1, 9)).unwrap();
        assert_eq!(fit.centroids, vec![vec![1.0, 1.0]]);
        assert!(fit.converged);
        assert!((fit.inertia - (2.0 + 2.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn k_equal_points_gives_zero_inertia() {
        let pts = vec![vec![0.0], vec![5.0], vec![9.0], vec![-3.0]];
        let fit = kmeans(&pts, &opts(4, 1)).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut seen = fit.assignments.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn errors() {
        assert_eq!(kmeans(&[], &opts(1, 0)), Err(ClusterError::Empty));
        assert_eq!(kmeans(&[vec![1.0]], &opts(0, 0)), Err(ClusterError::ZeroK));
        assert!(matches!(
            kmeans(&[vec![1.0], vec![1.0, 2.0]], &opts(1, 0)),
            Err(ClusterError::DimensionMismatch { index: 1, .. })
        ));
        assert_eq!(
            kmeans(&[vec![1.0], vec![1.0], vec![2.0]], &opts(3, 0)),
            Err(ClusterError::TooFewDistinct { k: 3, distinct: 2 })
        );
        assert_eq!(
            kmeans(
                &[vec![0.0, 0.0]],
                &KmeansOptions {
                    distance: Distance::Cosine,
                    ..opts(1, 0)
                }
            ),
            Err(ClusterError::ZeroVector(0))
        );
    }

    #[test]
    fn cosine_mode_groups_by_direction() {
        let pts = vec![
            vec![1.0, 0.0],
            vec![10.0, 0.5],
            vec![0.0, 1.0],
            vec![0.2, 7.0],
        ];
        let fit = kmeans(
            &pts,
            &KmeansOptions {
                distance: Distance::Cosine,
                ..opts(2, 3)
            },
        )
        .unwrap();
        assert_eq!(fit.assignments[0], fit.assignments[1]);
        assert_eq!(fit.assignments[2], fit.assignments[3]);
        assert_ne!(fit.assignments[0], fit.assignments[2]);
    }

    #[test]
    fn membership_rows() {
        assert_eq!(one_hot(&[0, 1, 0], 2), vec![vec![1, 0, 1], vec![0, 1, 0]]);
        assert_eq!(one_hot(&[0, 0], 1), vec![vec![1, 1]]);
        let model = ClusterModel {
            k: 2,
            centroids: vec![vec![0.0], vec![1.0]],
            assignments: [("a".to_string(), 1), ("b".to_string(), 0)]
                .into_iter()
                .collect(),
            inertia: 0.0,
        };
        let ids = vec!["b".to_string(), "a".to_string()];
        assert_eq!(
            model.to_membership(&ids).unwrap(),
            vec![vec![1, 0], vec![0, 1]]
        );
        assert!(model.to_membership(&["zz".to_string()]).is_err());
        assert_eq!(model.labels()["a"], "cluster_1");
    }

    #[test]
    fn fit_keys_by_prompt() {
        let recs = vec![
            EmbeddingRecord {
                prompt_id: "x".into(),
                vector: vec![0.0],
            },
            EmbeddingRecord {
                prompt_id: "y".into(),
                vector: vec![10.0],
            },
        ];
        let model = ClusterModel::fit(&recs, &opts(2, 0)).unwrap();
        assert_ne!(model.assignments["x"], model.assignments["y"]);
        let dup = vec![recs[0].clone(), recs[0].clone()];
        assert_eq!(
            ClusterModel::fit(&dup, &opts(1, 0)),
            Err(ClusterError::DuplicateId("x".into()))
        );
    }
}
