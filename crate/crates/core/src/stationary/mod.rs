//! Stationarity conversion fitted on normal-class data.
//!
//! Per feature column the ADF test decides whether the normal data is already
//! stationary. Non-stationary columns are detrended by subtracting a trailing
//! moving average, and, when an autocorrelation peak reveals a season, are
//! additionally differenced at that period. The resulting [`StationaryPlan`]
//! is frozen and applied unchanged to every class.

pub mod adf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{autocorrelation_function, SignalWindow};
use crate::timeseries::{TabularDataset, TimeseriesError};

pub use adf::{adf_test, AdfResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationaryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error(transparent)]
    Dataset(#[from] TimeseriesError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryConfig {
    pub alpha: f64,
    /// Upper bound on the Schwert lag order.
    pub max_lag: Option<usize>,
    /// Replaces the built-in MacKinnon value when set.
    pub critical_value: Option<f64>,
    pub ma_window: usize,
    pub period_min_lag: usize,
    pub period_max_lag: usize,
    pub period_threshold: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            max_lag: None,
            critical_value: None,
            ma_window: 12,
            period_min_lag: 2,
            period_max_lag: 100,
            period_threshold: 0.3,
        }
    }
}

/// Transformation for one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPlan {
    pub detrend: bool,
    pub ma_window: usize,
    pub deseasonalize: bool,
    pub period: Option<usize>,
}

impl ColumnPlan {
    pub fn identity(ma_window: usize) -> Self {
        Self {
            detrend: false,
            ma_window,
            deseasonalize: false,
            period: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.detrend && !self.deseasonalize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPlan {
    pub feature_names: Vec<String>,
    pub columns: Vec<ColumnPlan>,
}

impl StationaryPlan {
    pub fn identity(feature_names: &[String], ma_window: usize) -> Self {
        Self {
            feature_names: feature_names.to_vec(),
            columns: vec![ColumnPlan::identity(ma_window); feature_names.len()],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.columns.iter().all(ColumnPlan::is_identity)
    }
}

/// `x[t] - mean(x[t-w+1..=t])`, using the expanding prefix mean for `t < w-1`.
pub fn detrend(series: &[f64], ma_window: usize) -> Result<Vec<f64>, StationaryError> {
    if ma_window < 1 {
        return Err(StationaryError::InvalidArgument(
            "moving-average window must be at least 1".into(),
        ));
    }
    if ma_window > series.len() {
        return Err(StationaryError::InvalidArgument(format!(
            "moving-average window {ma_window} exceeds series length {}",
            series.len()
        )));
    }
    let mut out = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let lo = (t + 1).saturating_sub(ma_window);
        let win = &series[lo..=t];
        // Summed fresh each step: a running sum would drift on long series.
        let mean = win.iter().sum::<f64>() / win.len() as f64;
        out.push(series[t] - mean);
    }
    Ok(out)
}

/// Seasonal differencing `x[t] - x[t-period]`; the first `period` entries are 0.
pub fn deseasonalize(series: &[f64], period: usize) -> Result<Vec<f64>, StationaryError> {
    if period < 1 {
        return Err(StationaryError::InvalidArgument(
            "period must be at least 1".into(),
        ));
    }
    if period >= series.len() {
        return Err(StationaryError::InvalidArgument(format!(
            "period {period} must be shorter than the series ({})",
            series.len()
        )));
    }
    Ok((0..series.len())
        .map(|t| if t < period { 0.0 } else { series[t] - series[t - period] })
        .collect())
}

/// Strongest autocorrelation peak with lag in `[min_lag, max_lag]`, if it
/// exceeds `threshold`.
///
/// Only local maxima of the autocorrelation function are candidates; the
/// slowly decaying shoulder next to lag 0 is not a season.
pub fn detect_period(
    series: &[f64],
    min_lag: usize,
    max_lag: usize,
    threshold: f64,
) -> Result<Option<usize>, StationaryError> {
    if !(2 <= min_lag && min_lag < max_lag && max_lag < series.len()) {
        return Err(StationaryError::InvalidArgument(format!(
            "need 2 <= min_lag < max_lag < len, got {min_lag}, {max_lag}, {}",
            series.len()
        )));
    }
    let window = SignalWindow::new(series)
        .map_err(|e| StationaryError::InvalidArgument(e.to_string()))?;
    let ac = autocorrelation_function(&window);
    if ac[0] == 0.0 {
        return Ok(None);
    }
    let mut best: Option<(usize, f64)> = None;
    for k in min_lag..=max_lag {
        let left = ac[k] > ac[k - 1];
        let right = k + 1 >= ac.len() || ac[k] >= ac[k + 1];
        if left && right && ac[k] > threshold && best.is_none_or(|(_, v)| ac[k] > v) {
            best = Some((k, ac[k]));
        }
    }
    Ok(best.map(|(k, _)| k))
}

/// Maximal runs of consecutive rows labelled `normal_label`, per segment.
fn normal_stretches(data: &TabularDataset, normal_label: usize) -> Vec<std::ops::Range<usize>> {
    let labels = data.labels();
    let mut out = Vec::new();
    for seg in data.segments() {
        let mut start = None;
        for r in seg.range() {
            match (labels[r] == normal_label, start) {
                (true, None) => start = Some(r),
                (false, Some(s)) => {
                    out.push(s..r);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(s..seg.range().end);
        }
    }
    out
}

/// Fits a plan using only rows labelled `normal_label`.
///
/// Each normal stretch (one simulation run, typically) is tested separately
/// and the column is flagged non-stationary when most stretches are. The
/// season is the period reported by most detrended stretches.
pub fn fit_plan(
    data: &TabularDataset,
    normal_label: usize,
    config: &StationaryConfig,
) -> Result<StationaryPlan, StationaryError> {
    let stretches = normal_stretches(data, normal_label);
    let longest = stretches.iter().map(|r| r.len()).max().unwrap_or(0);
    let needed = adf::MIN_OBSERVATIONS + config.max_lag.unwrap_or(0);
    if longest < needed.max(config.ma_window) {
        return Err(StationaryError::InsufficientData {
            needed: needed.max(config.ma_window),
            got: longest,
        });
    }
    let mut columns = Vec::with_capacity(data.n_features());
    for j in 0..data.n_features() {
        let series: Vec<Vec<f64>> = stretches
            .iter()
            .filter(|r| r.len() >= config.ma_window)
            .map(|r| r.clone().map(|i| data.value(i, j)).collect())
            .collect();
        columns.push(fit_column(&series, config)?);
    }
    Ok(StationaryPlan {
        feature_names: data.feature_names().to_vec(),
        columns,
    })
}

fn fit_column(series: &[Vec<f64>], config: &StationaryConfig) -> Result<ColumnPlan, StationaryError> {
    let mut tested = 0usize;
    let mut stationary = 0usize;
    for s in series {
        match adf_test(s, config.max_lag, config.alpha, config.critical_value) {
            Ok(r) => {
                tested += 1;
                stationary += usize::from(r.is_stationary);
            }
            Err(StationaryError::InsufficientData { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if tested == 0 {
        return Err(StationaryError::InsufficientData {
            needed: adf::MIN_OBSERVATIONS,
            got: series.iter().map(Vec::len).max().unwrap_or(0),
        });
    }
    let mut plan = ColumnPlan::identity(config.ma_window);
    if 2 * stationary >= tested {
        return Ok(plan);
    }
    plan.detrend = true;

    let mut votes: Vec<(usize, usize)> = Vec::new();
    let mut voters = 0usize;
    for s in series {
        let detrended = detrend(s, config.ma_window)?;
        let max_lag = config.period_max_lag.min(detrended.len().saturating_sub(1));
        if max_lag <= config.period_min_lag {
            continue;
        }
        voters += 1;
        if let Some(p) = detect_period(&detrended, config.period_min_lag, max_lag, config.period_threshold)? {
            match votes.iter_mut().find(|(q, _)| *q == p) {
                Some((_, c)) => *c += 1,
                None => votes.push((p, 1)),
            }
        }
    }
    // Most votes wins, smaller period on ties; a season must be seen in at
    // least half of the stretches.
    votes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if let Some(&(p, count)) = votes.first() {
        if 2 * count >= voters {
            plan.deseasonalize = true;
            plan.period = Some(p);
        }
    }
    Ok(plan)
}

/// Applies `plan` per segment and column: detrend, then seasonal differencing.
pub fn apply_plan(data: &TabularDataset, plan: &StationaryPlan) -> Result<TabularDataset, StationaryError> {
    if plan.columns.len() != data.n_features() {
        return Err(StationaryError::InvalidArgument(format!(
            "plan has {} columns, data has {}",
            plan.columns.len(),
            data.n_features()
        )));
    }
    if plan.is_identity() {
        return Ok(data.clone());
    }
    let n = data.n_features();
    let mut values = data.values().to_vec();
    for seg in data.segments() {
        for (j, col) in plan.columns.iter().enumerate() {
            if col.is_identity() {
                continue;
            }
            let mut series = data.segment_column(seg, j);
            if col.detrend {
                series = detrend(&series, col.ma_window)?;
            }
            if let (true, Some(p)) = (col.deseasonalize, col.period) {
                series = deseasonalize(&series, p)?;
            }
            for (i, v) in seg.range().zip(series) {
                values[i * n + j] = v;
            }
        }
    }
    Ok(data.with_values(values)?)
}
