//! Orthant-wise projected quasi-Newton minimization of the penalized
//! covariance-trace objective, plus the penalty schedule with early stopping.
//!
//! Iterations take the form beta <- P_O[beta - alpha * P_S[H^{-1} grad J]]
//! where P_S keeps only components of the scaled step whose sign agrees with
//! the raw gradient and P_O clamps the result back onto the nonnegative
//! orthant, snapping near-zero entries to exactly zero.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::DVector;

use crate::data::{DataMatrix, FeatureWeights};
use crate::error::{Error, Result};
use crate::graph::ManifoldKernel;
use crate::objective::{gradient_exact_from_gram, gram_of_support, objective_exact_from_gram};

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub lbfgs_memory: usize,
    pub max_iter: usize,
    /// Relative objective-change tolerance.
    pub tol_obj: f64,
    /// Projected-gradient infinity-norm tolerance.
    pub tol_grad: f64,
    pub backtrack_shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// Entries below this are snapped to exactly zero by the orthant projection.
    pub zero_threshold: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lbfgs_memory: 10,
            max_iter: 500,
            tol_obj: 1e-8,
            tol_grad: 1e-6,
            backtrack_shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 50,
            zero_threshold: 1e-10,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.lbfgs_memory >= 1
            && self.max_iter >= 1
            && self.tol_obj > 0.0
            && self.tol_grad > 0.0
            && self.backtrack_shrink > 0.0
            && self.backtrack_shrink < 1.0
            && self.sufficient_decrease > 0.0
            && self.max_backtracks >= 1
            && self.zero_threshold > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("optimizer config out of range".into()))
        }
    }
}

/// Penalty schedule: start at lambda0, halve on empty solutions, grow by
/// C / 2^t otherwise, for at most floor(log2 C) rounds.
#[derive(Debug, Clone)]
pub struct PenaltySchedule {
    pub lambda0: f64,
    pub c: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self { lambda0: 1e-4, c: 1024.0 }
    }
}

impl PenaltySchedule {
    pub fn t_max(&self) -> usize {
        self.c.log2().floor() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.lambda0 > 0.0 && self.c > 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter("penalty schedule requires lambda0 > 0 and C > 1".into()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub beta: FeatureWeights,
    /// Penalized objective J at the returned iterate.
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub support_size: usize,
}

/// Outcome of the penalty line search.
#[derive(Debug, Clone)]
pub struct LambdaSearchResult {
    pub lambda: f64,
    pub result: SolveResult,
    /// (lambda_t, support size) for every round that ran.
    pub history: Vec<(f64, usize)>,
}

/// Zeroes components of the scaled step whose sign differs from the
/// corresponding raw-gradient component.
pub fn project_sign_alignment(step: &DVector<f64>, gradient: &DVector<f64>) -> DVector<f64> {
    assert_eq!(step.len(), gradient.len());
    DVector::from_fn(step.len(), |i, _| {
        if step[i] * gradient[i] > 0.0 {
            step[i]
        } else {
            0.0
        }
    })
}

/// Clamps onto the nonnegative orthant and snaps entries below the threshold
/// to exactly zero.
pub fn project_orthant(candidate: &DVector<f64>, zero_threshold: f64) -> DVector<f64> {
    DVector::from_fn(candidate.len(), |i, _| {
        let v = candidate[i];
        if v < zero_threshold {
            0.0
        } else {
            v
        }
    })
}

/// L-BFGS two-loop recursion: approximates H^{-1} g from stored (s, y) pairs.
fn two_loop(g: &DVector<f64>, pairs: &VecDeque<(DVector<f64>, DVector<f64>)>) -> DVector<f64> {
    if pairs.is_empty() {
        return g.clone();
    }
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / s.dot(y);
        let alpha = rho * s.dot(&q);
        q -= y * alpha;
        alphas.push((rho, alpha));
    }
    let (s_last, y_last) = pairs.back().unwrap();
    let gamma = s_last.dot(y_last) / y_last.dot(y_last);
    let mut r = q * gamma;
    for ((s, y), (rho, alpha)) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * y.dot(&r);
        r += s * (alpha - b);
    }
    r
}

struct Evaluation {
    objective: f64,
    gradient: DVector<f64>,
}

fn evaluate(
    x: &DataMatrix,
    m: &ManifoldKernel,
    lambda: f64,
    beta: &DVector<f64>,
    iteration: usize,
) -> Result<Evaluation> {
    let a = gram_of_support(x, beta);
    let q = objective_exact_from_gram(&a, m)?;
    let g = gradient_exact_from_gram(x, &a, m)?;
    let objective = q + lambda * beta.sum();
    let gradient = g.add_scalar(lambda);
    if !objective.is_finite() || gradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDivergence {
            message: "non-finite objective or gradient".into(),
            iteration,
            last_beta: beta.iter().copied().collect(),
        });
    }
    Ok(Evaluation { objective, gradient })
}

fn objective_only(x: &DataMatrix, m: &ManifoldKernel, lambda: f64, beta: &DVector<f64>) -> Result<f64> {
    let a = gram_of_support(x, beta);
    Ok(objective_exact_from_gram(&a, m)? + lambda * beta.sum())
}

/// Infinity norm of the projected gradient: components pointing out of the
/// feasible set at an active bound are masked.
fn projected_grad_norm(beta: &DVector<f64>, g: &DVector<f64>) -> f64 {
    let mut norm = 0.0f64;
    for i in 0..beta.len() {
        if beta[i] == 0.0 && g[i] > 0.0 {
            continue;
        }
        norm = norm.max(g[i].abs());
    }
    norm
}

pub fn owd_minimize(
    x: &DataMatrix,
    m: &ManifoldKernel,
    lambda: f64,
    beta0: &FeatureWeights,
    cfg: &OptimizerConfig,
) -> Result<SolveResult> {
    owd_minimize_traced(x, m, lambda, beta0, cfg, None)
}

/// As `owd_minimize`, optionally writing one tab-separated trace line per
/// accepted iteration: iteration, objective, support size, step size.
pub fn owd_minimize_traced(
    x: &DataMatrix,
    m: &ManifoldKernel,
    lambda: f64,
    beta0: &FeatureWeights,
    cfg: &OptimizerConfig,
    mut trace: Option<&mut dyn Write>,
) -> Result<SolveResult> {
    cfg.validate()?;
    if lambda < 0.0 {
        return Err(Error::InvalidParameter("penalty must be nonnegative".into()));
    }
    if beta0.len() != x.n_features() {
        return Err(Error::InvalidInput("beta0 length does not match feature count".into()));
    }

    let mut beta = project_orthant(beta0.as_vector(), cfg.zero_threshold);
    let mut eval = evaluate(x, m, lambda, &beta, 0)?;
    let mut pairs: VecDeque<(DVector<f64>, DVector<f64>)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iter {
        if projected_grad_norm(&beta, &eval.gradient) <= cfg.tol_grad {
            converged = true;
            break;
        }

        let scaled = two_loop(&eval.gradient, &pairs);
        let mut step = project_sign_alignment(&scaled, &eval.gradient);
        if step.iter().all(|&v| v == 0.0) {
            // Alignment rejected the whole quasi-Newton step; fall back to
            // steepest descent, which is trivially aligned.
            step = eval.gradient.clone();
        }

        let mut alpha = 1.0;
        let mut accepted: Option<(DVector<f64>, f64)> = None;
        for _ in 0..cfg.max_backtracks {
            let cand = project_orthant(&(&beta - &step * alpha), cfg.zero_threshold);
            let j_new = objective_only(x, m, lambda, &cand)?;
            let decrease = eval.gradient.dot(&(&cand - &beta));
            if j_new.is_finite() && j_new <= eval.objective + cfg.sufficient_decrease * decrease {
                accepted = Some((cand, j_new));
                break;
            }
            alpha *= cfg.backtrack_shrink;
        }
        let Some((next, j_new)) = accepted else {
            // No acceptable step exists along this direction.
            break;
        };

        iterations = iter;
        let next_eval = evaluate(x, m, lambda, &next, iter)?;
        let s = &next - &beta;
        let y = &next_eval.gradient - &eval.gradient;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            pairs.push_back((s.clone(), y));
            if pairs.len() > cfg.lbfgs_memory {
                pairs.pop_front();
            }
        }
        if let Some(w) = trace.as_deref_mut() {
            let support = next.iter().filter(|&&v| v > 0.0).count();
            let _ = writeln!(w, "{iter}\t{j_new:.12e}\t{support}\t{:.6e}", s.norm());
        }
        let rel_change = (eval.objective - j_new).abs() / eval.objective.abs().max(1e-30);
        beta = next;
        eval = next_eval;
        if rel_change <= cfg.tol_obj {
            converged = true;
            break;
        }
    }

    let support_size = beta.iter().filter(|&&v| v > 0.0).count();
    Ok(SolveResult {
        beta: FeatureWeights::new(beta)?,
        objective_value: eval.objective,
        iterations,
        converged,
        support_size,
    })
}

/// Runs the penalty schedule against an arbitrary solver. Exposed separately
/// so the schedule logic can be driven by a stub in tests.
pub fn lambda_search_with<F>(mut solve: F, schedule: &PenaltySchedule) -> Result<LambdaSearchResult>
where
    F: FnMut(f64) -> Result<SolveResult>,
{
    schedule.validate()?;
    let t_max = schedule.t_max();
    let mut lambda = schedule.lambda0;
    let mut outcomes: Vec<(f64, SolveResult)> = Vec::new();
    let mut history: Vec<(f64, usize)> = Vec::new();

    for t in 0..=t_max {
        let result = solve(lambda)?;
        history.push((lambda, result.support_size));
        let zero = result.beta.is_zero();
        outcomes.push((lambda, result));

        // Early stop on the zero -> nonzero -> zero pattern, keeping the middle.
        let k = outcomes.len();
        if k >= 3 && zero && outcomes[k - 2].1.support_size > 0 && outcomes[k - 3].1.support_size == 0 {
            let (mid_lambda, mid_result) = outcomes.swap_remove(k - 2);
            return Ok(LambdaSearchResult { lambda: mid_lambda, result: mid_result, history });
        }

        if zero {
            lambda *= 0.5;
        } else {
            lambda *= schedule.c / 2f64.powi(t as i32);
        }
    }

    // Smallest support among nonzero solutions, ties toward larger lambda.
    let best = outcomes
        .into_iter()
        .filter(|(_, r)| r.support_size > 0)
        .min_by(|(la, ra), (lb, rb)| {
            ra.support_size
                .cmp(&rb.support_size)
                .then(lb.partial_cmp(la).unwrap())
        });
    match best {
        Some((lambda, result)) => Ok(LambdaSearchResult { lambda, result, history }),
        None => Err(Error::EmptySelection),
    }
}

/// Full penalty line search: solves at each scheduled lambda starting from
/// all-ones weights.
pub fn lambda_line_search(
    x: &DataMatrix,
    m: &ManifoldKernel,
    cfg: &OptimizerConfig,
    schedule: &PenaltySchedule,
) -> Result<LambdaSearchResult> {
    let beta0 = FeatureWeights::ones(x.n_features());
    lambda_search_with(|lambda| owd_minimize(x, m, lambda, &beta0, cfg), schedule)
}
