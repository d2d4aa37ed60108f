//! Density-based clustering with noise, over symbol embedding vectors.
//!
//! Deterministic for a fixed point order: clusters are numbered in the order
//! their first core point appears, and border points attach to the first
//! cluster that reaches them.

use serde::{Deserialize, Serialize};

use crate::model::NORM_EPS;

/// Distance between embedding points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `1 - cos(a, b)`, in `[0, 2]`; zero-norm vectors are maximally distant.
    #[default]
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (&x, &y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                let na = na.sqrt();
                let nb = nb.sqrt();
                if na < NORM_EPS || nb < NORM_EPS {
                    2.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    }
}

pub const NOISE: i32 = -1;

/// Cluster labels per point: `NOISE` (-1) or a dense cluster index.
///
/// A point is core when at least `min_points` points (itself included) lie
/// within distance `eps` inclusive.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_points: usize, metric: Metric) -> Vec<i32> {
    let n = points.len();
    let mut labels = vec![NOISE; n];
    let mut visited = vec![false; n];
    let mut cluster = 0i32;
    let mut queue: Vec<usize> = Vec::new();

    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| metric.distance(&points[i], &points[j]) <= eps)
            .collect()
    };

    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seed_neighbors = neighbors(i);
        if seed_neighbors.len() < min_points {
            continue; // stays noise unless a later cluster reaches it
        }
        labels[i] = cluster;
        queue.clear();
        queue.extend(seed_neighbors);
        let mut qi = 0;
        while qi < queue.len() {
            let j = queue[qi];
            qi += 1;
            if labels[j] == NOISE {
                labels[j] = cluster; // border or soon-to-be-expanded core
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nn = neighbors(j);
            if nn.len() >= min_points {
                queue.extend(nn);
            }
        }
        cluster += 1;
    }
    labels
}

/// Number of clusters in a label vector.
pub fn cluster_count(labels: &[i32]) -> usize {
    labels.iter().filter(|&&l| l >= 0).map(|&l| l + 1).max().unwrap_or(0) as usize
}
