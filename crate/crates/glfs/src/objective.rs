//! Covariance-trace objective over feature weights.
//!
//! The objective is Tr(A[(M+A)^{-1}M]^2) with A = X^T diag(beta) X, equal to
//! lambda2^2/sigma^2 times the trace of the regression-coefficient covariance.
//! The commuting-case simplifications Tr(A(M+A)^{-2}M^2) and
//! f_i^T(M-A)(M+A)^{-3}M^2 f_i are kept as diagnostics: they coincide with the
//! exact forms only when M and A commute (e.g. lambda1 = 0).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::data::{DataMatrix, FeatureWeights};
use crate::error::{Error, Result};
use crate::graph::{LaplacianOperator, ManifoldKernel};

/// A = X^T diag(beta) X, the sample-space Gram matrix of weighted features.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGram {
    a: DMatrix<f64>,
}

impl WeightedGram {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

fn check_dims(x: &DataMatrix, beta: &FeatureWeights, m: &ManifoldKernel) -> Result<()> {
    check_beta(x, beta)?;
    if m.n() != x.n_samples() {
        return Err(Error::InvalidInput(format!(
            "kernel size {} does not match sample count {}",
            m.n(),
            x.n_samples()
        )));
    }
    Ok(())
}

fn check_beta(x: &DataMatrix, beta: &FeatureWeights) -> Result<()> {
    if beta.len() != x.n_features() {
        return Err(Error::InvalidInput(format!(
            "weight length {} does not match feature count {}",
            beta.len(),
            x.n_features()
        )));
    }
    Ok(())
}

/// Builds A as Y^T Y with Y = diag(sqrt(beta)) X, so A is positive
/// semidefinite by construction. Only the support rows contribute.
pub fn weighted_gram(x: &DataMatrix, beta: &FeatureWeights) -> Result<WeightedGram> {
    check_beta(x, beta)?;
    Ok(WeightedGram { a: gram_of_support(x, beta.as_vector()) })
}

pub(crate) fn gram_of_support(x: &DataMatrix, beta: &DVector<f64>) -> DMatrix<f64> {
    let n = x.n_samples();
    let support: Vec<usize> = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return DMatrix::zeros(n, n);
    }
    let mut y = DMatrix::zeros(support.len(), n);
    for (r, &i) in support.iter().enumerate() {
        let w = beta[i].sqrt();
        y.row_mut(r).copy_from(&(x.values().row(i) * w));
    }
    y.transpose() * y
}

fn factorize(a: &DMatrix<f64>, m: &ManifoldKernel) -> Result<Cholesky<f64, Dyn>> {
    (m.matrix() + a)
        .cholesky()
        .ok_or_else(|| Error::Numerical("factorization of M + A failed".into()))
}

/// Q_exact = Tr(A (M+A)^{-1} M (M+A)^{-1} M), the pre-commutation trace.
pub fn objective_exact(x: &DataMatrix, beta: &FeatureWeights, m: &ManifoldKernel) -> Result<f64> {
    check_dims(x, beta, m)?;
    let a = gram_of_support(x, beta.as_vector());
    objective_exact_from_gram(&a, m)
}

pub(crate) fn objective_exact_from_gram(a: &DMatrix<f64>, m: &ManifoldKernel) -> Result<f64> {
    let chol = factorize(a, m)?;
    let b = chol.solve(m.matrix()); // B = (M+A)^{-1} M
    // Tr(A B B) accumulated column-by-column.
    let ab = a * &b;
    let n = b.nrows();
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += ab[(i, j)] * b[(j, i)];
        }
    }
    Ok(tr)
}

/// Q_paper = Tr(A (M+A)^{-2} M^2), the printed final form (diagnostic).
pub fn objective_paper(x: &DataMatrix, beta: &FeatureWeights, m: &ManifoldKernel) -> Result<f64> {
    check_dims(x, beta, m)?;
    let a = gram_of_support(x, beta.as_vector());
    let chol = factorize(&a, m)?;
    let ppm = chol.solve(&chol.solve(m.matrix())); // (M+A)^{-2} M
    let appm = &a * ppm;
    let mm = m.matrix();
    let n = mm.nrows();
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += appm[(i, j)] * mm[(j, i)];
        }
    }
    Ok(tr)
}

/// Exact gradient of Q_exact: component i is f_i^T G f_i with
/// G = B[B - (BA + AB)P], B = PM, P = (M+A)^{-1}.
pub fn gradient_exact(x: &DataMatrix, beta: &FeatureWeights, m: &ManifoldKernel) -> Result<DVector<f64>> {
    check_dims(x, beta, m)?;
    let a = gram_of_support(x, beta.as_vector());
    gradient_exact_from_gram(x, &a, m)
}

pub(crate) fn gradient_exact_from_gram(
    x: &DataMatrix,
    a: &DMatrix<f64>,
    m: &ManifoldKernel,
) -> Result<DVector<f64>> {
    let chol = factorize(a, m)?;
    let b = chol.solve(m.matrix());
    let ba = &b * a;
    let ab = a * &b;
    // W P with P symmetric: (P W^T)^T.
    let wp = chol.solve(&(ba + ab).transpose()).transpose();
    let g = &b * (&b - wp);
    Ok(quadratic_forms(x, &g))
}

/// Printed gradient (diagnostic): f_i^T (M - A)(M+A)^{-3} M^2 f_i.
pub fn gradient_printed(x: &DataMatrix, beta: &FeatureWeights, m: &ManifoldKernel) -> Result<DVector<f64>> {
    check_dims(x, beta, m)?;
    let a = gram_of_support(x, beta.as_vector());
    let chol = factorize(&a, m)?;
    let pm = chol.solve(m.matrix());
    let pppm = chol.solve(&chol.solve(&pm)); // (M+A)^{-3} M
    let g = (m.matrix() - &a) * (pppm * m.matrix());
    Ok(quadratic_forms(x, &g))
}

/// Direct Tr(Cov(w)) through the d-dimensional normal equations, with all d
/// feature rows weighted by sqrt(beta). Validates the Woodbury reduction:
/// equals (sigma^2 / lambda2^2) * Q_exact.
pub fn covariance_trace_oracle(
    x: &DataMatrix,
    beta: &FeatureWeights,
    lambda1: f64,
    lambda2: f64,
    l: &LaplacianOperator,
    sigma: f64,
) -> Result<f64> {
    check_beta(x, beta)?;
    if l.n() != x.n_samples() {
        return Err(Error::InvalidInput("laplacian size does not match sample count".into()));
    }
    if lambda2 <= 0.0 {
        return Err(Error::InvalidParameter("lambda2 must be positive".into()));
    }
    let d = x.n_features();
    let mut xg = x.values().clone();
    for i in 0..d {
        let w = beta.as_vector()[i].sqrt();
        xg.row_mut(i).scale_mut(w);
    }
    let k = &xg * xg.transpose();
    let mut z = &k + (&xg * l.matrix()) * xg.transpose() * lambda1;
    for i in 0..d {
        z[(i, i)] += lambda2;
    }
    let chol = z
        .cholesky()
        .ok_or_else(|| Error::Numerical("factorization of Z failed".into()))?;
    // Tr(Z^{-1} K Z^{-1}) = Tr(Z^{-2} K).
    let w = chol.solve(&chol.solve(&k));
    Ok(sigma * sigma * w.trace())
}

/// Penalized objective J = Q_exact + lambda * sum(beta).
pub fn penalized_objective(
    x: &DataMatrix,
    beta: &FeatureWeights,
    m: &ManifoldKernel,
    lambda: f64,
) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter("penalty must be nonnegative".into()));
    }
    Ok(objective_exact(x, beta, m)? + lambda * beta.as_vector().sum())
}

/// diag(X G X^T): one quadratic form per feature row. Rows are independent,
/// so they are computed in parallel when the `parallel` feature is on.
fn quadratic_forms(x: &DataMatrix, g: &DMatrix<f64>) -> DVector<f64> {
    let xv = x.values();
    let xg = crate::parallel::row_chunked_mul(xv, g);
    let d = xv.nrows();
    let n = xv.ncols();
    DVector::from_fn(d, |i, _| {
        let mut s = 0.0;
        for j in 0..n {
            s += xg[(i, j)] * xv[(i, j)];
        }
        s
    })
}
