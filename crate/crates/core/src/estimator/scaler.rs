use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::posterior_metrics::sample_std;

/// Per-feature z-score parameters learned from a training table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Constant training columns, removed before fitting.
    pub dropped: Vec<String>,
}

impl Scaler {
    /// Standardizes `features` with the stored statistics, matching columns by
    /// name. Columns the scaler dropped are ignored; any other unknown column
    /// is an error, as is a missing one.
    pub fn transform(&self, features: &FeatureMatrix) -> Result<Array2<f64>> {
        if features.is_empty() {
            return Err(Error::InvalidInput("empty feature matrix".into()));
        }
        let unknown: Vec<&String> = features
            .feature_names
            .iter()
            .filter(|n| !self.feature_names.contains(n) && !self.dropped.contains(n))
            .collect();
        let missing: Vec<&String> = self
            .feature_names
            .iter()
            .filter(|n| !features.feature_names.contains(n))
            .collect();
        if !unknown.is_empty() || !missing.is_empty() {
            return Err(Error::FeatureMismatch(format!(
                "unknown features {unknown:?}, missing features {missing:?}"
            )));
        }
        let idx: Vec<usize> = self
            .feature_names
            .iter()
            .map(|n| features.column_index(n).expect("checked above"))
            .collect();
        let mut out = features.rows.select(Axis(1), &idx);
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|x| (x - self.means[j]) / self.stds[j]);
        }
        Ok(out)
    }
}

/// Learns z-score parameters (divisor n - 1) on `features` and returns the
/// standardized table. Constant columns are dropped with a warning.
pub fn standardize(features: &FeatureMatrix) -> Result<(FeatureMatrix, Scaler)> {
    if features.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "standardization needs at least 2 rows, got {}",
            features.len()
        )));
    }
    let mut scaler = Scaler {
        feature_names: Vec::new(),
        means: Vec::new(),
        stds: Vec::new(),
        dropped: Vec::new(),
    };
    for (j, col) in features.rows.axis_iter(Axis(1)).enumerate() {
        let name = &features.feature_names[j];
        let std = sample_std(col);
        if std == 0.0 {
            log::warn!("dropping constant feature {name}");
            scaler.dropped.push(name.clone());
        } else {
            scaler.feature_names.push(name.clone());
            scaler.means.push(col.mean().expect("non-empty"));
            scaler.stds.push(std);
        }
    }
    if scaler.feature_names.is_empty() {
        return Err(Error::InvalidInput("every feature column is constant".into()));
    }
    let rows = scaler.transform(features)?;
    let table = FeatureMatrix {
        feature_names: scaler.feature_names.clone(),
        rows,
        ..features.clone()
    };
    Ok((table, scaler))
}
