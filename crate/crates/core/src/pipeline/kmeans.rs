//! Lloyd's algorithm with k-means++ seeding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub fn distinct_rows(points: &Matrix) -> usize {
    let mut order: Vec<usize> = (0..points.rows()).collect();
    order.sort_by(|&a, &b| lex_cmp(points.row(a), points.row(b)));
    order
        .windows(2)
        .filter(|w| lex_cmp(points.row(w[0]), points.row(w[1])).is_ne())
        .count()
        + usize::from(!order.is_empty())
}

fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus(points: &Matrix, k: usize, rng: &mut seed::Rng) -> Matrix {
    let n = points.rows();
    let mut centroids = Matrix::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = points.iter_rows().map(|p| sq_dist(p, centroids.row(0))).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let mut pick = n - 1;
        if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if d2[pick] == 0.0 {
                // rounding pushed the target past the end
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
        }
        centroids.row_mut(j).copy_from_slice(points.row(pick));
        for (i, p) in points.iter_rows().enumerate() {
            let d = sq_dist(p, centroids.row(j));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Clusters the rows of `points` into `k` groups; deterministic given `seed`.
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::Clustering("k must be positive".into()));
    }
    let distinct = distinct_rows(points);
    if k > distinct {
        return Err(Error::Clustering(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus(points, k, &mut rng);
    let n = points.rows();
    let dim = points.cols();
    let mut labels = vec![usize::MAX; n];
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for (i, p) in points.iter_rows().enumerate() {
            let (j, d) = nearest(p, &centroids);
            dist[i] = d;
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
        }

        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter_rows().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(p) {
                *s += v;
            }
        }

        // Empty clusters take the point farthest from its own centroid.
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .ok_or_else(|| Error::Clustering("cannot re-seed an empty cluster".into()))?;
                let old = labels[far];
                counts[old] -= 1;
                for (s, v) in sums.row_mut(old).iter_mut().zip(points.row(far)) {
                    *s -= v;
                }
                labels[far] = j;
                counts[j] = 1;
                sums.row_mut(j).copy_from_slice(points.row(far));
                dist[far] = 0.0;
                changed = true;
            }
        }

        for (j, &count) in counts.iter().enumerate() {
            let inv = 1.0 / count as f64;
            for (c, s) in centroids.row_mut(j).iter_mut().zip(sums.row(j)) {
                *c = s * inv;
            }
        }
        if !changed {
            break;
        }
    }

    Ok(Clustering {
        labels,
        centroids,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_groups() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]]).unwrap();
        for seed in 0..20 {
            let c = kmeans(&pts, 2, seed).unwrap();
            assert_eq!(c.labels[0], c.labels[1]);
            assert_eq!(c.labels[2], c.labels[3]);
            assert_ne!(c.labels[0], c.labels[2]);
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = Matrix::from_rows(&[[0.0], [1.0], [5.0], [9.0]]).unwrap();
        let c = kmeans(&pts, 4, 3).unwrap();
        let mut labels = c.labels.clone();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), 4);
        for (i, p) in pts.iter_rows().enumerate() {
            assert_eq!(c.centroids.row(c.labels[i]), p);
        }
    }

    #[test]
    fn single_cluster_centroid_is_mean() {
        let pts = Matrix::from_rows(&[[1.0, 2.0], [3.0, 6.0], [5.0, 1.0]]).unwrap();
        let c = kmeans(&pts, 1, 0).unwrap();
        assert!(c.labels.iter().all(|&l| l == 0));
        assert_eq!(c.centroids.row(0), &[3.0, 3.0]);
    }

    #[test]
    fn too_many_clusters() {
        let pts = Matrix::from_rows(&[[1.0], [1.0], [2.0]]).unwrap();
        assert_eq!(distinct_rows(&pts), 2);
        assert!(matches!(kmeans(&pts, 3, 0), Err(Error::Clustering(_))));
        assert!(kmeans(&pts, 2, 0).is_ok());
    }

    #[test]
    fn deterministic() {
        let rows: Vec<[f64; 2]> = (0..50).map(|i| [f64::from(i % 7), f64::from((i * 13) % 11)]).collect();
        let pts = Matrix::from_rows(&rows).unwrap();
        assert_eq!(kmeans(&pts, 5, 9).unwrap(), kmeans(&pts, 5, 9).unwrap());
    }
}
