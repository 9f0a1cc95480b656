//! Synthetic noise-robustness benchmark: a handful of informative features
//! carrying Gaussian cluster structure buried among pure-noise features.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::task_rng;

/// Cluster mean signs on the informative coordinates. Rows have pairwise
/// Hamming distance >= 2 (the second half negates the first, distance 4 to
/// its partner), so all cluster means are well separated at scale delta.
const CODE_TABLE: [[f64; 4]; 8] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
    [-1.0, -1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0, 1.0],
    [-1.0, -1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0, -1.0],
];

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    /// Standard deviation of the pure-noise features.
    pub noise_sigma: f64,
    pub n_clusters: usize,
    /// Scale delta of the cluster means on informative coordinates.
    pub cluster_mean_scale: f64,
    pub informative_within_std: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_samples: 400,
            n_informative: 4,
            n_noise: 1000,
            noise_sigma: 0.2,
            n_clusters: 4,
            cluster_mean_scale: 1.0,
            informative_within_std: 0.1,
        }
    }
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        if self.n_samples < 2 || self.n_informative == 0 || self.n_clusters == 0 {
            return Err(Error::InvalidParameter("simulation counts must be positive".into()));
        }
        if self.n_informative > CODE_TABLE[0].len() {
            return Err(Error::InvalidParameter(format!(
                "at most {} informative features supported",
                CODE_TABLE[0].len()
            )));
        }
        if self.n_clusters > CODE_TABLE.len() {
            return Err(Error::InvalidParameter(format!(
                "at most {} clusters supported",
                CODE_TABLE.len()
            )));
        }
        if self.noise_sigma < 0.0 || self.cluster_mean_scale <= 0.0 || self.informative_within_std < 0.0 {
            return Err(Error::InvalidParameter("simulation scales out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub x: DataMatrix,
    pub labels: Vec<usize>,
    /// Row indices of the planted informative features, when known.
    pub true_feature_ids: Option<Vec<usize>>,
}

/// Draws the benchmark dataset: equal-size Gaussian clusters on the
/// informative coordinates (remainder samples go to the last cluster),
/// i.i.d. Normal(0, sigma^2) noise features, and a seeded shuffle of the
/// feature order with the informative positions recorded.
pub fn simulate(cfg: &SimulationConfig, seed: u64) -> Result<LabeledDataset> {
    cfg.validate()?;
    let n = cfg.n_samples;
    let d = cfg.n_informative + cfg.n_noise;
    let mut rng = task_rng(seed, 0);

    let per_cluster = n / cfg.n_clusters;
    let labels: Vec<usize> = (0..n)
        .map(|j| (j / per_cluster.max(1)).min(cfg.n_clusters - 1))
        .collect();

    // Informative rows first, noise rows after; shuffled below.
    let mut values = DMatrix::zeros(d, n);
    for i in 0..cfg.n_informative {
        for j in 0..n {
            let mean = cfg.cluster_mean_scale * CODE_TABLE[labels[j]][i];
            let z: f64 = rng.sample(StandardNormal);
            values[(i, j)] = mean + cfg.informative_within_std * z;
        }
    }
    for i in cfg.n_informative..d {
        for j in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            values[(i, j)] = cfg.noise_sigma * z;
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng);
    let mut shuffled = DMatrix::zeros(d, n);
    let mut true_ids = vec![0usize; cfg.n_informative];
    for (new_row, &old_row) in order.iter().enumerate() {
        shuffled.row_mut(new_row).copy_from(&values.row(old_row));
        if old_row < cfg.n_informative {
            true_ids[old_row] = new_row;
        }
    }

    Ok(LabeledDataset {
        x: DataMatrix::new(shuffled)?,
        labels,
        true_feature_ids: Some(true_ids),
    })
}

/// Recovery score over the planted features: 1/4 * sum 1/(max(4, rank) - 3),
/// with 1-based ranks by decreasing weight and ties broken by lower index.
/// Equals 1 exactly when the four planted features hold the top four ranks.
pub fn ranking_score(weights: &[f64], true_ids: &[usize]) -> Result<f64> {
    if true_ids.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "ranking score is defined for exactly 4 true features, got {}",
            true_ids.len()
        )));
    }
    if weights.len() < 4 {
        return Err(Error::InvalidInput("fewer than 4 features".into()));
    }
    if true_ids.iter().any(|&i| i >= weights.len()) {
        return Err(Error::InvalidInput("true feature index out of range".into()));
    }
    let order = rank_order(weights);
    let mut rank_of = vec![0usize; weights.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank_of[i] = pos + 1;
    }
    let score = true_ids
        .iter()
        .map(|&i| 1.0 / ((rank_of[i].max(4) - 3) as f64))
        .sum::<f64>()
        / 4.0;
    Ok(score)
}

/// Indices of the k largest weights, ties broken by lower index.
pub fn top_k_features(weights: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > weights.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds feature count {}",
            weights.len()
        )));
    }
    Ok(rank_order(weights)[..k].to_vec())
}

/// All feature indices sorted by decreasing weight, ties by lower index.
pub fn rank_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
    order
}
