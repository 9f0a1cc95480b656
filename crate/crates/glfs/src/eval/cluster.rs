//! Clustering-based evaluation: k-means with restarts, normalized mutual
//! information, spectral clustering, and leave-one-out 1-NN accuracy.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand::seq::index::sample;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::parallel::map_indexed;
use crate::rng::task_rng;

const KMEANS_MAX_ITER: usize = 300;

/// Lloyd's algorithm on sample columns, best of `restarts` seeded runs by
/// within-cluster sum of squares. Initialization samples k distinct data
/// points; an emptied cluster is reseeded from the point farthest from its
/// assigned centroid.
pub fn kmeans(x: &DataMatrix, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = x.n_samples();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count must satisfy 1 <= k <= {n}, got {k}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be positive".into()));
    }
    let runs = map_indexed(restarts, |r| kmeans_single(x, k, task_rng(seed, r as u64)));
    let best = runs
        .into_iter()
        .min_by(|(_, wa), (_, wb)| wa.partial_cmp(wb).unwrap())
        .unwrap();
    Ok(best.0)
}

fn kmeans_single(x: &DataMatrix, k: usize, mut rng: impl Rng) -> (Vec<usize>, f64) {
    let xv = x.values();
    let n = x.n_samples();
    let d = x.n_features();

    let mut centroids = DMatrix::zeros(d, k);
    let init = sample(&mut rng, n, k);
    for (c, j) in init.iter().enumerate() {
        centroids.column_mut(c).copy_from(&xv.column(j));
    }

    let mut assignment = vec![usize::MAX; n];
    let mut dists = vec![0.0f64; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for j in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = (xv.column(j) - centroids.column(c)).norm_squared();
                if dist < best_d {
                    best_d = dist;
                    best_c = c;
                }
            }
            dists[j] = best_d;
            if assignment[j] != best_c {
                assignment[j] = best_c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut counts = vec![0usize; k];
        let mut sums = DMatrix::zeros(d, k);
        for j in 0..n {
            counts[assignment[j]] += 1;
            let col = xv.column(j) + sums.column(assignment[j]);
            sums.column_mut(assignment[j]).copy_from(&col);
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed from the globally farthest point.
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(b.cmp(&a)))
                    .unwrap();
                centroids.column_mut(c).copy_from(&xv.column(far));
                dists[far] = 0.0;
            } else {
                centroids.column_mut(c).copy_from(&(sums.column(c) / counts[c] as f64));
            }
        }
    }
    let inertia: f64 = (0..n)
        .map(|j| (xv.column(j) - centroids.column(assignment[j])).norm_squared())
        .sum();
    (assignment, inertia)
}

/// Normalized mutual information I(a;b)/sqrt(H(a)H(b)) with natural-log
/// entropies. Two single-cluster partitions score 1; if exactly one side has
/// zero entropy the score is 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("label vectors differ in length".into()));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("empty label vectors".into()));
    }
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0usize; kb]; ka];
    for (&ai, &bi) in a.iter().zip(b) {
        joint[ai][bi] += 1;
    }
    let ca: Vec<usize> = (0..ka).map(|i| joint[i].iter().sum()).collect();
    let cb: Vec<usize> = (0..kb).map(|j| (0..ka).map(|i| joint[i][j]).sum()).collect();
    let entropy = |counts: &[usize]| {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum::<f64>()
    };
    let ha = entropy(&ca);
    let hb = entropy(&cb);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = joint[i][j];
            if c == 0 {
                continue;
            }
            let p = c as f64 / n;
            mi += p * (p * n * n / (ca[i] as f64 * cb[j] as f64)).ln();
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Spectral clustering on the symmetric-normalized Laplacian
/// I - D^{-1/2} S D^{-1/2}: embed into the k eigenvectors of smallest
/// eigenvalue, normalize rows to unit length, then run seeded k-means.
pub fn spectral_cluster(s: &SimilarityGraph, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = s.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count must satisfy 1 <= k <= {n}, got {k}"
        )));
    }
    let sm = s.matrix();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = sm.row(i).sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut lsym = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            lsym[(i, j)] -= inv_sqrt_deg[i] * sm[(i, j)] * inv_sqrt_deg[j];
        }
    }
    let eig = lsym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let va: f64 = eig.eigenvalues[a];
        let vb: f64 = eig.eigenvalues[b];
        va.partial_cmp(&vb).unwrap().then(a.cmp(&b))
    });

    // Embedding rows as "samples" for k-means: k x n matrix.
    let mut embedding = DMatrix::zeros(k, n);
    for (r, &e) in order.iter().take(k).enumerate() {
        for j in 0..n {
            embedding[(r, j)] = eig.eigenvectors[(j, e)];
        }
    }
    for j in 0..n {
        let norm = embedding.column(j).norm();
        if norm > 0.0 {
            embedding.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    kmeans(&DataMatrix::new(embedding)?, k, 10, seed)
}

/// Leave-one-out nearest-neighbor accuracy: the fraction of samples whose
/// nearest other sample (Euclidean, ties by lower index) shares their label.
pub fn loo_1nn_accuracy(x: &DataMatrix, labels: &[usize]) -> Result<f64> {
    let n = x.n_samples();
    if labels.len() != n {
        return Err(Error::InvalidInput("label length does not match sample count".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let d2 = crate::graph::pairwise_sq_dists(x);
    let hits = (0..n)
        .filter(|&i| {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for j in 0..n {
                if j != i && d2[(i, j)] < best_d {
                    best_d = d2[(i, j)];
                    best = j;
                }
            }
            labels[best] == labels[i]
        })
        .count();
    Ok(hits as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn blobs(n_per: usize, centers: &[(f64, f64)], spread: f64, seed: u64) -> (DataMatrix, Vec<usize>) {
        use rand_distr::StandardNormal;
        let mut rng = task_rng(seed, 99);
        let n = n_per * centers.len();
        let mut vals = DMatrix::zeros(2, n);
        let mut labels = Vec::with_capacity(n);
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for j in 0..n_per {
                let col = c * n_per + j;
                let zx: f64 = rng.sample(StandardNormal);
                let zy: f64 = rng.sample(StandardNormal);
                vals[(0, col)] = cx + spread * zx;
                vals[(1, col)] = cy + spread * zy;
                labels.push(c);
            }
        }
        (DataMatrix::new(vals).unwrap(), labels)
    }

    #[test]
    fn kmeans_single_cluster() {
        let (x, _) = blobs(5, &[(0.0, 0.0)], 1.0, 1);
        let labels = kmeans(&x, 1, 3, 0).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn kmeans_k_equals_n() {
        let (x, _) = blobs(3, &[(0.0, 0.0), (5.0, 5.0)], 0.5, 2);
        let labels = kmeans(&x, 6, 5, 0).unwrap();
        let mut seen = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 6, "each point gets its own cluster");
    }

    #[test]
    fn kmeans_separated_blobs() {
        let (x, truth) = blobs(20, &[(-10.0, 0.0), (10.0, 0.0)], 0.1, 3);
        let labels = kmeans(&x, 2, 10, 7).unwrap();
        assert_eq!(nmi(&labels, &truth).unwrap(), 1.0);
    }

    #[test]
    fn kmeans_deterministic() {
        let (x, _) = blobs(15, &[(0.0, 0.0), (3.0, 1.0), (1.0, 4.0)], 1.0, 4);
        let a = kmeans(&x, 3, 10, 42).unwrap();
        let b = kmeans(&x, 3, 10, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nmi_axioms() {
        let a = vec![0, 0, 1, 1];
        assert_eq!(nmi(&a, &a).unwrap(), 1.0);
        let relabeled = vec![1, 1, 0, 0];
        assert_eq!(nmi(&a, &relabeled).unwrap(), 1.0);
        let independent = vec![0, 1, 0, 1];
        assert!(nmi(&a, &independent).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nmi_symmetry_and_range() {
        let a = vec![0, 0, 1, 2, 2, 1, 0];
        let b = vec![1, 0, 1, 2, 0, 1, 0];
        let ab = nmi(&a, &b).unwrap();
        let ba = nmi(&b, &a).unwrap();
        // Summation order differs between the two argument orders, so allow
        // last-ulp drift.
        assert!((ab - ba).abs() <= 1e-12, "{ab} vs {ba}");
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn nmi_degenerate_partitions() {
        let flat = vec![0, 0, 0];
        assert_eq!(nmi(&flat, &flat).unwrap(), 1.0);
        assert_eq!(nmi(&flat, &[0, 1, 2]).unwrap(), 0.0);
        assert!(nmi(&flat, &[0, 1]).is_err());
    }

    #[test]
    fn spectral_recovers_disconnected_cliques() {
        let n = 8;
        let mut s = DMatrix::zeros(n, n);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    s[(i, j)] = 0.8;
                    s[(4 + i, 4 + j)] = 0.8;
                }
            }
        }
        let g = SimilarityGraph::new(s).unwrap();
        let labels = spectral_cluster(&g, 2, 0).unwrap();
        let truth = vec![0, 0, 0, 0, 1, 1, 1, 1];
        assert_eq!(nmi(&labels, &truth).unwrap(), 1.0);
    }

    #[test]
    fn spectral_single_cluster() {
        let g = SimilarityGraph::new(DMatrix::zeros(3, 3)).unwrap();
        let labels = spectral_cluster(&g, 1, 0).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
    }

    #[test]
    fn spectral_two_blobs_high_nmi() {
        use crate::graph::{build_knn_heat_graph, KernelWidth};
        let (x, truth) = blobs(25, &[(-5.0, 0.0), (5.0, 0.0)], 0.3, 6);
        let g = build_knn_heat_graph(&x, 5, KernelWidth::Auto).unwrap();
        let labels = spectral_cluster(&g, 2, 11).unwrap();
        assert!(nmi(&labels, &truth).unwrap() >= 0.9);
    }

    #[test]
    fn loo_separated_blobs_perfect() {
        let (x, labels) = blobs(10, &[(-10.0, 0.0), (10.0, 0.0)], 0.1, 5);
        assert_eq!(loo_1nn_accuracy(&x, &labels).unwrap(), 1.0);
    }

    #[test]
    fn loo_identical_points_different_labels() {
        let x = DataMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        assert_eq!(loo_1nn_accuracy(&x, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn loo_xor_corners() {
        // Unit-square corners with diagonal labels: every nearest neighbor is
        // an adjacent, oppositely-labeled corner.
        let x = DataMatrix::new(DMatrix::from_row_slice(
            2,
            4,
            &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0],
        ))
        .unwrap();
        assert_eq!(loo_1nn_accuracy(&x, &[0, 1, 1, 0]).unwrap(), 0.0);
    }
}
