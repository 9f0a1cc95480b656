use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A d x n data matrix. Rows are features, columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    feature_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        Self::with_names(values, None)
    }

    pub fn with_names(values: DMatrix<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if values.nrows() < 1 || values.ncols() < 2 {
            return Err(Error::InvalidInput(format!(
                "data matrix must be at least 1x2, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data matrix contains non-finite values".into()));
        }
        if let Some(names) = &feature_names {
            if names.len() != values.nrows() {
                return Err(Error::InvalidInput(format!(
                    "{} feature names for {} features",
                    names.len(),
                    values.nrows()
                )));
            }
        }
        Ok(Self { values, feature_names })
    }

    /// Number of features d.
    pub fn n_features(&self) -> usize {
        self.values.nrows()
    }

    /// Number of samples n.
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Feature vector f_i as a row slice copy.
    pub fn feature(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// New matrix keeping only the given feature rows, in the given order.
    pub fn select_features(&self, ids: &[usize]) -> Result<Self> {
        let d = self.n_features();
        if let Some(&bad) = ids.iter().find(|&&i| i >= d) {
            return Err(Error::InvalidParameter(format!(
                "feature index {bad} out of range for {d} features"
            )));
        }
        if ids.is_empty() {
            return Err(Error::InvalidParameter("empty feature selection".into()));
        }
        let mut out = DMatrix::zeros(ids.len(), self.n_samples());
        for (r, &i) in ids.iter().enumerate() {
            out.row_mut(r).copy_from(&self.values.row(i));
        }
        let names = self
            .feature_names
            .as_ref()
            .map(|ns| ids.iter().map(|&i| ns[i].clone()).collect());
        Self::with_names(out, names)
    }

    /// New matrix keeping only the given sample columns, in the given order.
    pub fn select_samples(&self, ids: &[usize]) -> Result<Self> {
        let n = self.n_samples();
        if let Some(&bad) = ids.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidParameter(format!(
                "sample index {bad} out of range for {n} samples"
            )));
        }
        let mut out = DMatrix::zeros(self.n_features(), ids.len());
        for (c, &j) in ids.iter().enumerate() {
            out.column_mut(c).copy_from(&self.values.column(j));
        }
        Self::with_names(out, self.feature_names.clone())
    }
}

/// Nonnegative feature weight vector beta. Its support is the selected set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeights {
    beta: DVector<f64>,
}

impl FeatureWeights {
    pub fn new(beta: DVector<f64>) -> Result<Self> {
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("weights contain non-finite values".into()));
        }
        if let Some((i, _)) = beta.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::InvalidInput(format!("negative weight at index {i}")));
        }
        Ok(Self { beta })
    }

    pub fn zeros(d: usize) -> Self {
        Self { beta: DVector::zeros(d) }
    }

    pub fn ones(d: usize) -> Self {
        Self { beta: DVector::from_element(d, 1.0) }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.len() == 0
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.beta
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.beta.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonfinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, f64::NAN, 4.0]);
        assert!(DataMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_single_sample() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(DataMatrix::new(m).is_err());
    }

    #[test]
    fn negative_weight_rejected() {
        let v = DVector::from_vec(vec![0.5, -0.1]);
        assert!(FeatureWeights::new(v).is_err());
    }

    #[test]
    fn support_counts_strictly_positive() {
        let w = FeatureWeights::new(DVector::from_vec(vec![0.0, 1.0, 0.0, 2.0])).unwrap();
        assert_eq!(w.support(), vec![1, 3]);
        assert_eq!(w.support_size(), 2);
        assert!(!w.is_zero());
        assert!(FeatureWeights::zeros(3).is_zero());
    }

    #[test]
    fn select_features_reorders() {
        let m = DataMatrix::new(DMatrix::from_row_slice(3, 2, &[1., 2., 3., 4., 5., 6.])).unwrap();
        let sub = m.select_features(&[2, 0]).unwrap();
        assert_eq!(sub.values(), &DMatrix::from_row_slice(2, 2, &[5., 6., 1., 2.]));
    }
}
