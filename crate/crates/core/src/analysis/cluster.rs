use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Group per input point. Group 0 has the lower centroid on the first feature.
    pub labels: Vec<u8>,
    /// Centroids in standardized feature space.
    pub centroids: [Vec<f64>; 2],
    pub inertia: f64,
    /// Per-feature mean and standard deviation used for standardization.
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
    /// Restart that produced the kept solution.
    pub restart: usize,
    /// Objective after each Lloyd iteration of the kept restart.
    pub history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn group_sizes(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }
}

/// Two-means on z-scored (age, mean performance).
pub fn cluster_two_groups(
    points: &[(f64, f64)],
    seed: u64,
) -> Result<ClusterAssignment, AnalysisError> {
    let features: Vec<Vec<f64>> = points.iter().map(|&(a, p)| vec![a, p]).collect();
    cluster_features(&features, seed, &ClusterConfig::default())
}

pub fn cluster_features(
    points: &[Vec<f64>],
    seed: u64,
    config: &ClusterConfig,
) -> Result<ClusterAssignment, AnalysisError> {
    let n = points.len();
    if n < 2 {
        return Err(AnalysisError::TooFew {
            what: "points",
            required: 2,
            found: n,
        });
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(AnalysisError::Inconsistent(
            "points have no features".into(),
        ));
    }
    if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
        return Err(AnalysisError::NotRectangular {
            row: i,
            expected: dim,
            found: p.len(),
        });
    }
    if let Some(v) = points.iter().flatten().find(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidStatistic(*v));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(AnalysisError::IdenticalPoints);
    }

    let means: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n as f64)
        .collect();
    let sds: Vec<f64> = (0..dim)
        .map(|d| {
            let var = points
                .iter()
                .map(|p| (p[d] - means[d]).powi(2))
                .sum::<f64>()
                / n as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let z: Vec<Vec<f64>> = points
        .iter()
        .map(|p| (0..dim).map(|d| (p[d] - means[d]) / sds[d]).collect())
        .collect();

    let restarts = config.restarts.max(1);
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| lloyd(&z, substream(seed, r as u64), config.max_iterations))
        .collect();
    // lowest inertia; ties keep the earliest restart
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("at least one restart");

    let mut labels = best.labels;
    let mut centroids = best.centroids;
    if centroids[1][0] < centroids[0][0] {
        centroids.swap(0, 1);
        for l in &mut labels {
            *l = 1 - *l;
        }
    }
    Ok(ClusterAssignment {
        labels,
        centroids,
        inertia: best.inertia,
        feature_means: means,
        feature_sds: sds,
        restart,
        history: best.history,
    })
}

struct Run {
    labels: Vec<u8>,
    centroids: [Vec<f64>; 2],
    inertia: f64,
    history: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn lloyd(z: &[Vec<f64>], mut rng: crate::rng::SeededRng, max_iterations: usize) -> Run {
    let n = z.len();
    // two distinct seed points
    let first = rng.random_range(0..n);
    let others: Vec<usize> = (0..n).filter(|&i| z[i] != z[first]).collect();
    let second = others[rng.random_range(0..others.len())];
    let mut centroids = [z[first].clone(), z[second].clone()];
    let mut labels = vec![0u8; n];
    let mut history = Vec::new();

    for _ in 0..max_iterations.max(1) {
        let mut changed = false;
        for (i, p) in z.iter().enumerate() {
            let l = u8::from(dist2(p, &centroids[1]) < dist2(p, &centroids[0]));
            changed |= l != labels[i];
            labels[i] = l;
        }
        for g in 0..2u8 {
            if !labels.contains(&g) {
                // empty group: take the point farthest from the other centroid
                let other = &centroids[usize::from(1 - g)];
                let far = (0..n)
                    .max_by(|&a, &b| dist2(&z[a], other).total_cmp(&dist2(&z[b], other)))
                    .expect("non-empty");
                labels[far] = g;
                changed = true;
            }
        }
        for (g, c) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = z
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| usize::from(l) == g)
                .map(|(p, _)| p)
                .collect();
            for (d, v) in c.iter_mut().enumerate() {
                *v = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
            }
        }
        history.push(inertia(z, &labels, &centroids));
        if !changed {
            break;
        }
    }
    let inertia = *history.last().expect("one iteration");
    Run {
        labels,
        centroids,
        inertia,
        history,
    }
}

fn inertia(z: &[Vec<f64>], labels: &[u8], centroids: &[Vec<f64>; 2]) -> f64 {
    z.iter()
        .zip(labels)
        .map(|(p, &l)| dist2(p, &centroids[usize::from(l)]))
        .sum()
}
