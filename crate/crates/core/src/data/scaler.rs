//! Per-feature standardisation fitted on training data.

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::timeseries::TabularDataset;

/// Columns with a smaller standard deviation are only centred.
pub const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdConvention {
    /// Divide by `m`.
    #[default]
    Population,
    /// Divide by `m - 1`.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Already guarded: never below [`MIN_STD`].
    pub std: Vec<f64>,
    pub convention: StdConvention,
}

pub fn fit_scaler(train: &TabularDataset, convention: StdConvention) -> Result<Scaler, DataError> {
    let m = train.n_rows();
    if m == 0 || (convention == StdConvention::Sample && m < 2) {
        return Err(DataError::InvalidArgument("not enough rows to fit a scaler".into()));
    }
    let n = train.n_features();
    let mut mean = vec![0.0; n];
    for i in 0..m {
        for (acc, v) in mean.iter_mut().zip(train.row(i)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut ss = vec![0.0; n];
    for i in 0..m {
        for ((acc, v), mu) in ss.iter_mut().zip(train.row(i)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let denom = match convention {
        StdConvention::Population => m as f64,
        StdConvention::Sample => (m - 1) as f64,
    };
    let std = ss
        .iter()
        .map(|s| {
            let sd = (s / denom).sqrt();
            if sd < MIN_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Scaler {
        feature_names: train.feature_names().to_vec(),
        mean,
        std,
        convention,
    })
}

pub fn scale(data: &TabularDataset, scaler: &Scaler) -> Result<TabularDataset, DataError> {
    let n = data.n_features();
    if scaler.mean.len() != n {
        return Err(DataError::InvalidArgument(format!(
            "scaler fitted on {} features, data has {n}",
            scaler.mean.len()
        )));
    }
    let values = data
        .values()
        .chunks_exact(n)
        .flat_map(|row| {
            row.iter()
                .zip(&scaler.mean)
                .zip(&scaler.std)
                .map(|((v, mu), sd)| (v - mu) / sd)
        })
        .collect();
    Ok(data.with_values(values)?)
}
