//! LapRLS classification on a selected feature set, and ten-fold
//! cross-validation over the selection penalty.
//!
//! The decision value for a test sample is
//!   y_new = y^T Xg^T (Xg Xg^T + lambda1 Xg L Xg^T + lambda2 I)^{-1} x_new
//! with Xg the selected-feature training matrix; class 1 when y_new >= 0.5.

use nalgebra::DVector;
use rand::seq::SliceRandom;

use crate::data::{DataMatrix, FeatureWeights};
use crate::error::{Error, Result};
use crate::graph::{build_knn_heat_graph, laplacian, LaplacianOperator, KernelWidth};
use crate::optimizer::{owd_minimize, OptimizerConfig};
use crate::rng::task_rng;

use super::simulate::LabeledDataset;

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    /// Cached Z^{-1} Xg y; the decision value is its dot product with x_new.
    decision: DVector<f64>,
    n_selected: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Fits the closed-form LapRLS model on 0/1-coded targets. `x_train` holds
/// only the selected feature rows; `l_train` is the Laplacian over the same
/// training samples.
pub fn laprls_fit(
    x_train: &DataMatrix,
    y_train: &[f64],
    lambda1: f64,
    lambda2: f64,
    l_train: &LaplacianOperator,
) -> Result<ClassifierModel> {
    let n = x_train.n_samples();
    if y_train.len() != n {
        return Err(Error::InvalidInput("target length does not match sample count".into()));
    }
    if l_train.n() != n {
        return Err(Error::InvalidInput("laplacian size does not match sample count".into()));
    }
    if lambda1 < 0.0 || lambda2 <= 0.0 {
        return Err(Error::InvalidParameter("require lambda1 >= 0 and lambda2 > 0".into()));
    }
    let xg = x_train.values();
    let g = xg.nrows();
    let mut z = xg * xg.transpose() + (xg * l_train.matrix()) * xg.transpose() * lambda1;
    for i in 0..g {
        z[(i, i)] += lambda2;
    }
    let chol = z
        .cholesky()
        .ok_or_else(|| Error::Numerical("factorization of Z failed".into()))?;
    let y = DVector::from_row_slice(y_train);
    let decision = chol.solve(&(xg * y));
    Ok(ClassifierModel { decision, n_selected: g, lambda1, lambda2 })
}

/// Continuous decision values y_new for test columns (selected feature rows).
pub fn laprls_decision(model: &ClassifierModel, x_test: &DataMatrix) -> Result<DVector<f64>> {
    if x_test.n_features() != model.n_selected {
        return Err(Error::InvalidInput(format!(
            "test matrix has {} feature rows, model expects {}",
            x_test.n_features(),
            model.n_selected
        )));
    }
    Ok(x_test.values().transpose() * &model.decision)
}

/// Predicted 0/1 labels: 1 when the decision value is >= 0.5.
pub fn laprls_predict(model: &ClassifierModel, x_test: &DataMatrix) -> Result<Vec<usize>> {
    let scores = laprls_decision(model, x_test)?;
    Ok(scores.iter().map(|&v| usize::from(v >= 0.5)).collect())
}

/// Settings shared by the CV rounds.
#[derive(Debug, Clone)]
pub struct CvConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub graph_k: usize,
    pub kernel_width: KernelWidth,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best_lambda: f64,
    pub errors: usize,
    pub support: Vec<usize>,
    /// (lambda, errors, support size) per candidate.
    pub per_lambda: Vec<(f64, usize, usize)>,
}

/// Ten-fold style cross-validation over the selection penalty: for each
/// candidate lambda, select features on the full training data (selection is
/// unsupervised, so no label leaks), then count held-out misclassifications
/// across seeded round-robin folds. Best lambda minimizes errors; ties go to
/// the smaller support, then the larger lambda.
pub fn kfold_cv(
    dataset: &LabeledDataset,
    folds: usize,
    lambda_grid: &[f64],
    seed: u64,
    cfg: &CvConfig,
) -> Result<CvOutcome> {
    let n = dataset.x.n_samples();
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!(
            "fold count must satisfy 2 <= folds <= {n}, got {folds}"
        )));
    }
    if lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if dataset.labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("classification targets must be 0/1-coded".into()));
    }

    // Seeded shuffled round-robin fold assignment.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut task_rng(seed, 0));
    let mut fold_of = vec![0usize; n];
    for (pos, &j) in order.iter().enumerate() {
        fold_of[j] = pos % folds;
    }

    // Unsupervised selection on the full data, once per candidate penalty.
    let graph = build_knn_heat_graph(&dataset.x, cfg.graph_k, cfg.kernel_width)?;
    let lap = laplacian(&graph);
    let kernel = crate::graph::manifold_kernel(&lap, cfg.lambda1, cfg.lambda2)?;
    let beta0 = FeatureWeights::ones(dataset.x.n_features());

    let mut per_lambda = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let solve = owd_minimize(&dataset.x, &kernel, lambda, &beta0, &cfg.optimizer)?;
        let support = solve.beta.support();
        let mut errors = 0usize;
        for fold in 0..folds {
            let train_ids: Vec<usize> = (0..n).filter(|&j| fold_of[j] != fold).collect();
            let test_ids: Vec<usize> = (0..n).filter(|&j| fold_of[j] == fold).collect();
            if test_ids.is_empty() {
                continue;
            }
            errors += fold_errors(dataset, &support, &train_ids, &test_ids, cfg)?;
        }
        per_lambda.push((lambda, errors, support));
    }

    let best = per_lambda
        .iter()
        .enumerate()
        .min_by(|(_, (la, ea, sa)), (_, (lb, eb, sb))| {
            ea.cmp(eb)
                .then(sa.len().cmp(&sb.len()))
                .then(lb.partial_cmp(la).unwrap())
        })
        .map(|(i, _)| i)
        .unwrap();
    let (best_lambda, errors, support) = per_lambda[best].clone();
    Ok(CvOutcome {
        best_lambda,
        errors,
        support,
        per_lambda: per_lambda
            .into_iter()
            .map(|(l, e, s)| (l, e, s.len()))
            .collect(),
    })
}

fn fold_errors(
    dataset: &LabeledDataset,
    support: &[usize],
    train_ids: &[usize],
    test_ids: &[usize],
    cfg: &CvConfig,
) -> Result<usize> {
    if support.is_empty() {
        // Empty selection predicts class 0 everywhere.
        return Ok(test_ids.iter().filter(|&&j| dataset.labels[j] != 0).count());
    }
    let selected = dataset.x.select_features(support)?;
    let x_train = selected.select_samples(train_ids)?;
    let x_test = selected.select_samples(test_ids)?;
    let y_train: Vec<f64> = train_ids.iter().map(|&j| dataset.labels[j] as f64).collect();
    let l_train = if cfg.lambda1 == 0.0 {
        LaplacianOperator::zero(train_ids.len())
    } else {
        let k = cfg.graph_k.min(train_ids.len() - 1).max(1);
        laplacian(&build_knn_heat_graph(&x_train, k, cfg.kernel_width)?)
    };
    let model = laprls_fit(&x_train, &y_train, cfg.lambda1, cfg.lambda2, &l_train)?;
    let predicted = laprls_predict(&model, &x_test)?;
    Ok(test_ids
        .iter()
        .zip(predicted)
        .filter(|(&j, p)| dataset.labels[j] != *p)
        .count())
}
