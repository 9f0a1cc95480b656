//! Reference selectors: Laplacian Score ranking and greedy
//! variance-minimization over the approximated covariance Z^{-1}.

use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::{laplacian, LaplacianOperator, SimilarityGraph};
use crate::parallel::map_indexed;

/// Greedy criterion: trace of Z^{-1} (LapAOFS-style) or log-determinant of Z
/// (LapDOFS-style).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyCriterion {
    Trace,
    Determinant,
}

impl std::str::FromStr for GreedyCriterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "trace" => Ok(Self::Trace),
            "determinant" | "det" => Ok(Self::Determinant),
            other => Err(format!("unknown criterion {other:?}")),
        }
    }
}

/// Laplacian Score per feature; smaller means more important to the manifold
/// structure. For each feature r:
///   f~_r = f_r - ((f_r^T D 1)/(1^T D 1)) 1
///   score_r = (f~_r^T L f~_r) / (f~_r^T D f~_r)
/// Degenerate features (f~_r^T D f~_r = 0) score +inf.
pub fn laplacian_score(x: &DataMatrix, s: &SimilarityGraph) -> Result<DVector<f64>> {
    if s.n() != x.n_samples() {
        return Err(Error::InvalidInput("graph size does not match sample count".into()));
    }
    let lap = laplacian(s);
    let degrees = DVector::from_row_slice(lap.degrees());
    let total_degree: f64 = degrees.sum();
    if total_degree == 0.0 {
        return Err(Error::InvalidInput("empty graph: zero total degree".into()));
    }
    let d = x.n_features();
    let scores = map_indexed(d, |r| {
        let f = x.feature(r);
        let mean = f.dot(&degrees) / total_degree;
        let centered = f.add_scalar(-mean);
        let denom = centered
            .iter()
            .zip(degrees.iter())
            .map(|(c, w)| c * c * w)
            .sum::<f64>();
        if denom == 0.0 {
            return f64::INFINITY;
        }
        let numer = centered.dot(&(lap.matrix() * &centered));
        numer / denom
    });
    Ok(DVector::from_vec(scores))
}

fn z_matrix(x: &DataMatrix, l: &LaplacianOperator, ids: &[usize], lambda1: f64, lambda2: f64) -> DMatrix<f64> {
    let n = x.n_samples();
    let mut xg = DMatrix::zeros(ids.len(), n);
    for (r, &i) in ids.iter().enumerate() {
        xg.row_mut(r).copy_from(&x.values().row(i));
    }
    let mut z = &xg * xg.transpose() + (&xg * l.matrix()) * xg.transpose() * lambda1;
    for i in 0..ids.len() {
        z[(i, i)] += lambda2;
    }
    z
}

/// Criterion value for a candidate set; lower is better for both criteria
/// (log det is negated so the argmin convention applies uniformly).
fn criterion_value(
    x: &DataMatrix,
    l: &LaplacianOperator,
    ids: &[usize],
    lambda1: f64,
    lambda2: f64,
    criterion: GreedyCriterion,
) -> f64 {
    let z = z_matrix(x, l, ids, lambda1, lambda2);
    match criterion {
        GreedyCriterion::Trace => match z.clone().cholesky() {
            Some(chol) => chol.inverse().trace(),
            None => f64::INFINITY,
        },
        GreedyCriterion::Determinant => match z.cholesky() {
            // log det Z = 2 sum(log diag(chol)); maximize it, so negate.
            Some(chol) => {
                let logdet: f64 = (0..ids.len()).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
                -logdet
            }
            None => f64::INFINITY,
        },
    }
}

/// Greedily grows the selected set one feature at a time, minimizing
/// Tr(Z^{-1}) or maximizing log det Z. Ties break toward the lowest feature
/// index. Returns the selection order.
pub fn greedy_variance_select(
    x: &DataMatrix,
    l: &LaplacianOperator,
    lambda1: f64,
    lambda2: f64,
    k: usize,
    criterion: GreedyCriterion,
) -> Result<Vec<usize>> {
    let d = x.n_features();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "target count must satisfy 1 <= k <= {d}, got {k}"
        )));
    }
    if l.n() != x.n_samples() {
        return Err(Error::InvalidInput("laplacian size does not match sample count".into()));
    }
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut remaining: Vec<usize> = (0..d).collect();
    for _ in 0..k {
        let values = map_indexed(remaining.len(), |ci| {
            let mut trial = selected.clone();
            trial.push(remaining[ci]);
            criterion_value(x, l, &trial, lambda1, lambda2, criterion)
        });
        // Lowest-index tie-break: strict less-than keeps the earliest argmin.
        let mut best = 0;
        for ci in 1..remaining.len() {
            if values[ci] < values[best] {
                best = ci;
            }
        }
        selected.push(remaining.remove(best));
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_heat_graph, KernelWidth};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_data(d: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn graph_for(x: &DataMatrix) -> SimilarityGraph {
        build_knn_heat_graph(x, 2, KernelWidth::Auto).unwrap()
    }

    #[test]
    fn constant_feature_scores_infinity() {
        let mut vals = DMatrix::from_fn(3, 6, |i, j| ((i + 2 * j) % 5) as f64);
        vals.row_mut(1).fill(4.2);
        let x = DataMatrix::new(vals).unwrap();
        let g = graph_for(&x);
        let scores = laplacian_score(&x, &g).unwrap();
        assert!(scores[1].is_infinite());
        assert!(scores[0].is_finite());
    }

    #[test]
    fn smooth_feature_scores_zero() {
        // Feature constant on each connected component: numerator vanishes.
        let mut s = DMatrix::zeros(4, 4);
        s[(0, 1)] = 0.9;
        s[(1, 0)] = 0.9;
        s[(2, 3)] = 0.8;
        s[(3, 2)] = 0.8;
        let g = SimilarityGraph::new(s).unwrap();
        let x = DataMatrix::new(DMatrix::from_row_slice(
            2,
            4,
            &[
                1.0, 1.0, -1.0, -1.0, // constant per component, nonzero after centering
                0.3, 0.9, 0.2, 0.7,
            ],
        ))
        .unwrap();
        let scores = laplacian_score(&x, &g).unwrap();
        assert_relative_eq!(scores[0], 0.0, epsilon = 1e-14);
        assert!(scores[1] > 0.0);
    }

    #[test]
    fn score_matches_brute_force_summation() {
        // Independent oracle: numerator as sum over (f_ri - f_rj)^2 S_ij / 2.
        let x = random_data(5, 6, 13);
        let g = graph_for(&x);
        let scores = laplacian_score(&x, &g).unwrap();
        let lap = laplacian(&g);
        let degrees = lap.degrees();
        let total: f64 = degrees.iter().sum();
        for r in 0..5 {
            let f = x.feature(r);
            let mean: f64 = (0..6).map(|j| f[j] * degrees[j]).sum::<f64>() / total;
            let c: Vec<f64> = (0..6).map(|j| f[j] - mean).collect();
            let mut numer = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    numer += (c[i] - c[j]) * (c[i] - c[j]) * g.matrix()[(i, j)];
                }
            }
            numer *= 0.5;
            let denom: f64 = (0..6).map(|j| c[j] * c[j] * degrees[j]).sum();
            assert_relative_eq!(scores[r], numer / denom, max_relative = 1e-10);
        }
    }

    #[test]
    fn score_invariant_to_constant_shift() {
        let x = random_data(4, 7, 29);
        let g = graph_for(&x);
        let base = laplacian_score(&x, &g).unwrap();
        let mut shifted = x.values().clone();
        shifted.row_mut(2).add_scalar_mut(17.5);
        let xs = DataMatrix::new(shifted).unwrap();
        let moved = laplacian_score(&xs, &g).unwrap();
        assert_relative_eq!(base[2], moved[2], max_relative = 1e-8);
    }

    #[test]
    fn empty_graph_rejected() {
        let x = random_data(2, 4, 3);
        let g = SimilarityGraph::new(DMatrix::zeros(4, 4)).unwrap();
        assert!(laplacian_score(&x, &g).is_err());
    }

    #[test]
    fn greedy_k_equals_d_selects_all() {
        let x = random_data(4, 6, 31);
        let l = laplacian(&graph_for(&x));
        for crit in [GreedyCriterion::Trace, GreedyCriterion::Determinant] {
            let picked = greedy_variance_select(&x, &l, 0.5, 0.1, 4, crit).unwrap();
            let mut sorted = picked.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn greedy_first_pick_matches_exhaustive_singleton() {
        let x = random_data(6, 8, 37);
        let l = laplacian(&graph_for(&x));
        for crit in [GreedyCriterion::Trace, GreedyCriterion::Determinant] {
            let picked = greedy_variance_select(&x, &l, 0.5, 0.1, 1, crit).unwrap();
            let mut best = 0;
            let mut best_val = f64::INFINITY;
            for i in 0..6 {
                let v = criterion_value(&x, &l, &[i], 0.5, 0.1, crit);
                if v < best_val {
                    best_val = v;
                    best = i;
                }
            }
            assert_eq!(picked, vec![best], "criterion {crit:?}");
        }
    }

    #[test]
    fn greedy_prefix_consistent() {
        let x = random_data(7, 9, 41);
        let l = laplacian(&graph_for(&x));
        let full = greedy_variance_select(&x, &l, 0.5, 0.1, 5, GreedyCriterion::Trace).unwrap();
        let prefix = greedy_variance_select(&x, &l, 0.5, 0.1, 3, GreedyCriterion::Trace).unwrap();
        assert_eq!(&full[..3], &prefix[..]);
    }

    #[test]
    fn duplicate_feature_not_preferred() {
        // Feature 0 duplicated as feature 3; an informative fresh feature
        // should beat the duplicate in round two.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut vals = DMatrix::from_fn(4, 8, |_, _| rng.random_range(-1.0..1.0f64));
        let dup = vals.row(0).clone_owned();
        vals.row_mut(3).copy_from(&dup);
        let x = DataMatrix::new(vals).unwrap();
        let l = laplacian(&graph_for(&x));
        let two = greedy_variance_select(&x, &l, 0.5, 0.1, 2, GreedyCriterion::Trace).unwrap();
        assert!(two[0] == 0 || two[0] == 3);
        let other = if two[0] == 0 { 3 } else { 0 };
        // Adding the duplicate must not improve the criterion more than the
        // feature actually picked second.
        let picked_val = criterion_value(&x, &l, &two, 0.5, 0.1, GreedyCriterion::Trace);
        let dup_val = criterion_value(&x, &l, &[two[0], other], 0.5, 0.1, GreedyCriterion::Trace);
        assert!(picked_val <= dup_val + 1e-12);
        assert_ne!(two[1], other, "duplicate feature selected over fresh information");
    }

    #[test]
    fn greedy_rejects_large_k() {
        let x = random_data(3, 5, 47);
        let l = laplacian(&graph_for(&x));
        assert!(greedy_variance_select(&x, &l, 0.5, 0.1, 4, GreedyCriterion::Trace).is_err());
    }
}
