//! Sample-affinity graph, its Laplacian, and the manifold kernel
//! M = lambda2 (I + lambda1 L)^{-1} consumed by every objective downstream.

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Heat kernel width: a fixed positive value, or the mean off-diagonal
/// squared distance of the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelWidth {
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for KernelWidth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KernelWidth::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("invalid kernel width {s:?}"))?;
        if v > 0.0 {
            Ok(KernelWidth::Fixed(v))
        } else {
            Err(format!("kernel width must be positive, got {v}"))
        }
    }
}

/// Symmetric n x n affinity matrix with zero diagonal and entries in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    s: DMatrix<f64>,
}

impl SimilarityGraph {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::InvalidInput("similarity matrix must be square".into()));
        }
        if s != s.transpose() {
            return Err(Error::InvalidInput("similarity matrix must be symmetric".into()));
        }
        if s.iter().any(|&v| !v.is_finite() || !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidInput("affinities must be finite and in [0, 1]".into()));
        }
        if (0..s.nrows()).any(|i| s[(i, i)] != 0.0) {
            return Err(Error::InvalidInput("similarity matrix must have zero diagonal".into()));
        }
        Ok(Self { s })
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }
}

/// Degree matrix D and Laplacian L = D - S of a similarity graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianOperator {
    degrees: Vec<f64>,
    l: DMatrix<f64>,
}

impl LaplacianOperator {
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Laplacian of the empty graph, L = 0.
    pub fn zero(n: usize) -> Self {
        Self { degrees: vec![0.0; n], l: DMatrix::zeros(n, n) }
    }
}

/// M = lambda2 (I + lambda1 L)^{-1}: symmetric positive definite with
/// eigenvalues in (0, lambda2].
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldKernel {
    m: DMatrix<f64>,
    lambda1: f64,
    lambda2: f64,
}

impl ManifoldKernel {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

/// Squared Euclidean distances between sample columns.
pub fn pairwise_sq_dists(x: &DataMatrix) -> DMatrix<f64> {
    let xv = x.values();
    let n = x.n_samples();
    // d2_ij = g_ii + g_jj - 2 g_ij with G the sample Gram matrix.
    let gram = xv.transpose() * xv;
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    d2
}

/// kNN heat-kernel affinity graph with OR-symmetrization:
/// S_ij = exp(-d2_ij / t) when j is among the k nearest of i or vice versa.
pub fn build_knn_heat_graph(x: &DataMatrix, k: usize, width: KernelWidth) -> Result<SimilarityGraph> {
    let n = x.n_samples();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "neighbor count k must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let d2 = pairwise_sq_dists(x);
    let t = match width {
        KernelWidth::Fixed(t) => {
            if t <= 0.0 {
                return Err(Error::InvalidParameter(format!("kernel width must be positive, got {t}")));
            }
            t
        }
        KernelWidth::Auto => {
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        sum += d2[(i, j)];
                    }
                }
            }
            let mean = sum / (n * (n - 1)) as f64;
            if mean <= 0.0 {
                return Err(Error::InvalidParameter(
                    "auto kernel width is zero: all samples are identical".into(),
                ));
            }
            mean
        }
    };

    // k nearest neighbors of each sample; ties broken by lower sample index.
    let mut neighbor = vec![vec![false; n]; n];
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| {
            d2[(i, a)].partial_cmp(&d2[(i, b)]).unwrap().then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            neighbor[i][j] = true;
        }
    }

    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if neighbor[i][j] || neighbor[j][i] {
                let w = (-d2[(i, j)] / t).exp();
                s[(i, j)] = w;
                s[(j, i)] = w;
            }
        }
    }
    SimilarityGraph::new(s)
}

/// D and L = D - S.
pub fn laplacian(s: &SimilarityGraph) -> LaplacianOperator {
    let n = s.n();
    let sm = s.matrix();
    let degrees: Vec<f64> = (0..n).map(|i| sm.row(i).sum()).collect();
    let mut l = -sm.clone();
    for i in 0..n {
        l[(i, i)] += degrees[i];
    }
    LaplacianOperator { degrees, l }
}

/// M = lambda2 (I + lambda1 L)^{-1}, symmetrized after the solve.
pub fn manifold_kernel(l: &LaplacianOperator, lambda1: f64, lambda2: f64) -> Result<ManifoldKernel> {
    if lambda1 < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda1 must be nonnegative, got {lambda1}")));
    }
    if lambda2 <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda2 must be positive, got {lambda2}")));
    }
    let n = l.n();
    let mut a = l.matrix() * lambda1;
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("factorization of I + lambda1 L failed".into()))?;
    let mut m = chol.inverse() * lambda2;
    // Kill round-off asymmetry.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(ManifoldKernel { m, lambda1, lambda2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(d: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
        DataMatrix::new(vals).unwrap()
    }

    #[test]
    fn sq_dists_identical_columns() {
        let x = DataMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0])).unwrap();
        let d2 = pairwise_sq_dists(&x);
        assert_eq!(d2[(0, 1)], 0.0);
    }

    #[test]
    fn sq_dists_three_four_five() {
        let x = DataMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 4.0])).unwrap();
        let d2 = pairwise_sq_dists(&x);
        assert_relative_eq!(d2[(0, 1)], 25.0, max_relative = 1e-12);
    }

    #[test]
    fn sq_dists_symmetric_random() {
        let x = random_matrix(4, 10, 7);
        let d2 = pairwise_sq_dists(&x);
        assert_eq!(d2, d2.transpose());
        assert!((0..10).all(|i| d2[(i, i)] == 0.0));
        assert!(d2.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn heat_graph_mutual_neighbors() {
        // Two samples at squared distance 25, t = 25: S_01 = e^{-1}.
        let x = DataMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 4.0])).unwrap();
        let g = build_knn_heat_graph(&x, 1, KernelWidth::Fixed(25.0)).unwrap();
        assert_relative_eq!(g.matrix()[(0, 1)], (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn heat_graph_collinear_or_symmetrization() {
        // Samples at 0, 1, 10 with k = 1: 1-2 mutual; 2 is nearest to 3 so
        // OR-symmetrization adds the 2-3 edge; 1-3 stays absent.
        let x = DataMatrix::new(DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 10.0])).unwrap();
        let g = build_knn_heat_graph(&x, 1, KernelWidth::Fixed(1.0)).unwrap();
        assert!(g.matrix()[(0, 1)] > 0.0);
        assert!(g.matrix()[(1, 2)] > 0.0);
        assert_eq!(g.matrix()[(0, 2)], 0.0);
    }

    #[test]
    fn heat_graph_exact_symmetry_and_zero_diagonal() {
        let x = random_matrix(3, 12, 42);
        let g = build_knn_heat_graph(&x, 4, KernelWidth::Auto).unwrap();
        let s = g.matrix();
        for i in 0..12 {
            assert_eq!(s[(i, i)], 0.0);
            for j in 0..12 {
                assert!(s[(i, j)].to_bits() == s[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn heat_graph_rejects_large_k() {
        let x = random_matrix(2, 5, 1);
        assert!(build_knn_heat_graph(&x, 5, KernelWidth::Auto).is_err());
    }

    #[test]
    fn laplacian_two_node() {
        let s = SimilarityGraph::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let lap = laplacian(&s);
        assert_eq!(lap.degrees(), &[1.0, 1.0]);
        assert_eq!(lap.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_empty_graph() {
        let s = SimilarityGraph::new(DMatrix::zeros(3, 3)).unwrap();
        let lap = laplacian(&s);
        assert_eq!(lap.matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn laplacian_psd_and_nullspace() {
        let x = random_matrix(5, 9, 11);
        let g = build_knn_heat_graph(&x, 3, KernelWidth::Auto).unwrap();
        let lap = laplacian(&g);
        let eig = lap.matrix().clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&v| v >= -1e-10));
        let ones = DVector::from_element(9, 1.0);
        let resid = lap.matrix() * ones;
        let dmax = lap.degrees().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(resid.amax() <= 1e-12 * dmax);
    }

    #[test]
    fn kernel_identity_cases() {
        let lap = LaplacianOperator::zero(3);
        let m = manifold_kernel(&lap, 0.0, 2.5).unwrap();
        assert_relative_eq!(m.matrix(), &(DMatrix::identity(3, 3) * 2.5), max_relative = 1e-12);
    }

    #[test]
    fn kernel_two_node_hand_inverse() {
        let s = SimilarityGraph::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let lap = laplacian(&s);
        let m = manifold_kernel(&lap, 1.0, 1.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 3.0;
        assert_relative_eq!(m.matrix(), &expect, max_relative = 1e-12);
    }

    #[test]
    fn kernel_inverse_identity_and_spectrum() {
        let x = random_matrix(4, 8, 3);
        let g = build_knn_heat_graph(&x, 3, KernelWidth::Auto).unwrap();
        let lap = laplacian(&g);
        let lambda2 = 0.7;
        let m = manifold_kernel(&lap, 2.0, lambda2).unwrap();
        let a = DMatrix::identity(8, 8) + lap.matrix() * 2.0;
        let prod = a * m.matrix();
        let target = DMatrix::identity(8, 8) * lambda2;
        assert!((&prod - &target).norm() <= 1e-10 * target.norm());
        let eig = m.matrix().clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&v| v > 0.0 && v <= lambda2 + 1e-10));
    }

    #[test]
    fn kernel_rejects_bad_lambda2() {
        let lap = LaplacianOperator::zero(2);
        assert!(manifold_kernel(&lap, 0.0, 0.0).is_err());
        assert!(manifold_kernel(&lap, -1.0, 1.0).is_err());
    }
}
