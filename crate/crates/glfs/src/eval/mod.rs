//! Experimental harness: simulation, recovery scoring, clustering and
//! nearest-neighbor evaluation, and LapRLS classification.

pub mod classify;
pub mod cluster;
pub mod simulate;

pub use classify::{kfold_cv, laprls_decision, laprls_fit, laprls_predict, ClassifierModel, CvConfig, CvOutcome};
pub use cluster::{kmeans, loo_1nn_accuracy, nmi, spectral_cluster};
pub use simulate::{rank_order, ranking_score, simulate, top_k_features, LabeledDataset, SimulationConfig};

/// Flat, ordered metric bundle emitted by the harness.
#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    entries: Vec<(String, String)>,
}

impl EvalReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}\t{v}")?;
        }
        Ok(())
    }
}
