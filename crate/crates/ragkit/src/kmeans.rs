//! Seeded Lloyd's k-means, shared by the partitioned vector index and the
//! embedding-cluster bitext selector.
//!
//! Everything is deterministic for a fixed seed: initialization picks k
//! distinct points via a seeded partial shuffle, assignment ties go to the
//! lowest centroid index, and iteration stops after `max_iters` rounds or
//! when no centroid moves more than `tolerance`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::SplitMix64;

/// Clustering parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KMeansParams {
    /// Number of clusters; must be ≥ 1 and ≤ the number of points.
    pub k: usize,
    /// Seed for centroid initialization.
    pub seed: u64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop when no centroid moves at least this far (euclidean).
    pub tolerance: f64,
}

impl KMeansParams {
    /// Standard parameters used across the crate: ≤ 50 iterations or
    /// movement below 1e-6.
    pub fn new(k: usize, seed: u64) -> KMeansParams {
        KMeansParams { k, seed, max_iters: 50, tolerance: 1e-6 }
    }
}

/// Clustering output: centroids plus each point's cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f32>>,
    pub assignments: Vec<usize>,
}

/// Squared euclidean distance.
pub fn distance_sq(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((*x as f64) - (*y as f64)).powi(2)).sum()
}

/// Index of the nearest centroid (ties → lowest index).
pub fn nearest_centroid(point: &[f32], centroids: &[Vec<f32>]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = distance_sq(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Runs Lloyd's algorithm over `points`.
///
/// Errors when `k` is zero or exceeds the number of points, or when points
/// disagree on dimensionality.
pub fn kmeans(points: &[Vec<f32>], params: &KMeansParams) -> Result<KMeansResult> {
    let n = points.len();
    if params.k == 0 || params.k > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} points into {} clusters",
            params.k
        )));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { left: dim, right: bad.len() });
    }

    // Seeded partial Fisher–Yates: the first k slots are distinct indices.
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(params.seed);
    for i in 0..params.k.min(n.saturating_sub(1)) {
        let j = i + rng.next_below(n - i);
        order.swap(i, j);
    }
    let mut centroids: Vec<Vec<f32>> =
        order[..params.k].iter().map(|&i| points[i].clone()).collect();

    let mut assignments = vec![0usize; n];
    for _ in 0..params.max_iters {
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest_centroid(p, &centroids);
        }
        let mut sums = vec![vec![0f64; dim]; params.k];
        let mut counts = vec![0usize; params.k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += *v as f64;
            }
        }
        let mut moved: f64 = 0.0;
        for (i, (sum, &count)) in sums.iter().zip(&counts).enumerate() {
            if count == 0 {
                continue; // an emptied cluster keeps its previous centroid
            }
            let next: Vec<f32> = sum.iter().map(|s| (*s / count as f64) as f32).collect();
            moved = moved.max(distance_sq(&next, &centroids[i]).sqrt());
            centroids[i] = next;
        }
        if moved < params.tolerance {
            break;
        }
    }
    // Final assignment so callers see clusters consistent with the centroids.
    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest_centroid(p, &centroids);
    }
    Ok(KMeansResult { centroids, assignments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: f32, count: usize, rng: &mut SplitMix64) -> Vec<Vec<f32>> {
        (0..count)
            .map(|_| {
                vec![
                    center + (rng.next_f64() as f32 - 0.5) * 0.1,
                    center + (rng.next_f64() as f32 - 0.5) * 0.1,
                ]
            })
            .collect()
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let mut rng = SplitMix64::new(5);
        let mut points = blob(0.0, 40, &mut rng);
        points.extend(blob(10.0, 40, &mut rng));
        let result = kmeans(&points, &KMeansParams::new(2, 11)).unwrap();
        let first = result.assignments[0];
        assert!(result.assignments[..40].iter().all(|&a| a == first));
        assert!(result.assignments[40..].iter().all(|&a| a != first));
    }

    #[test]
    fn same_seed_same_result() {
        let mut rng = SplitMix64::new(8);
        let points = blob(1.0, 30, &mut rng);
        let a = kmeans(&points, &KMeansParams::new(4, 3)).unwrap();
        let b = kmeans(&points, &KMeansParams::new(4, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_must_fit_the_points() {
        let points = vec![vec![0.0f32, 0.0]];
        assert!(kmeans(&points, &KMeansParams::new(2, 0)).is_err());
        assert!(kmeans(&points, &KMeansParams::new(0, 0)).is_err());
        assert!(kmeans(&points, &KMeansParams::new(1, 0)).is_ok());
    }

    #[test]
    fn assignments_point_at_existing_centroids() {
        let mut rng = SplitMix64::new(2);
        let points = blob(0.0, 25, &mut rng);
        let result = kmeans(&points, &KMeansParams::new(5, 1)).unwrap();
        assert_eq!(result.assignments.len(), points.len());
        assert!(result.assignments.iter().all(|&a| a < 5));
        assert_eq!(result.centroids.len(), 5);
    }
}
