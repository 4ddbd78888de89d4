//! Tabular datasets and their conversion into sliding time-series windows.
//!
//! A [`TabularDataset`] is an `m × n` matrix of samples with one class label
//! per row. Rows are grouped into contiguous [`Segment`]s, one per independent
//! simulation run, so that windowing can avoid mixing unrelated runs.
//!
//! [`window`] turns it into a [`WindowedDataset`] of shape `(w, ts, n)` where
//! `w = m - ts + 1` (per segment under [`BoundaryPolicy::PerSimulation`]).
//! Windows are never padded: window `i` covers source rows `[i, i + ts)` and
//! carries the label of its last row.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeseriesError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time step {ts} exceeds the {rows} available rows; no window can be formed")]
    EmptyWindow { ts: usize, rows: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

/// Contiguous block of rows originating from one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
    /// Original (pre re-indexing) fault class of the run.
    pub class: u32,
    pub run: u32,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Row-major `m × n` sample matrix with per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    values: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    segments: Vec<Segment>,
}

impl TabularDataset {
    /// Builds a dataset that forms a single segment (class 0, run 0).
    pub fn new(
        values: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self, TimeseriesError> {
        let segments = vec![Segment {
            start: 0,
            len: labels.len(),
            class: 0,
            run: 0,
        }];
        Self::with_segments(values, labels, feature_names, segments)
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        labels: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self, TimeseriesError> {
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if rows.iter().any(|r| r.len() != feature_names.len()) {
            return Err(TimeseriesError::InvalidDataset(
                "row width differs from feature name count".into(),
            ));
        }
        Self::new(values, labels, feature_names)
    }

    pub fn with_segments(
        values: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        segments: Vec<Segment>,
    ) -> Result<Self, TimeseriesError> {
        let n = feature_names.len();
        let m = labels.len();
        if n == 0 {
            return Err(TimeseriesError::InvalidDataset("no features".into()));
        }
        if m == 0 {
            return Err(TimeseriesError::InvalidDataset("no samples".into()));
        }
        if values.len() != m * n {
            return Err(TimeseriesError::InvalidDataset(format!(
                "value count {} does not match {m} rows x {n} features",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(TimeseriesError::InvalidDataset(format!(
                "non-finite value at row {}, feature {}",
                pos / n,
                pos % n
            )));
        }
        let mut next = 0;
        for seg in &segments {
            if seg.start != next || seg.len == 0 {
                return Err(TimeseriesError::InvalidDataset(
                    "segments must be non-empty and tile the rows contiguously".into(),
                ));
            }
            next += seg.len;
        }
        if next != m {
            return Err(TimeseriesError::InvalidDataset(format!(
                "segments cover {next} rows, dataset has {m}"
            )));
        }
        Ok(Self {
            values,
            n_features: n,
            labels,
            feature_names,
            segments,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(feature)
            .step_by(self.n_features)
            .copied()
            .collect()
    }

    /// Column `feature` restricted to the rows of `segment`.
    pub fn segment_column(&self, segment: &Segment, feature: usize) -> Vec<f64> {
        segment.range().map(|r| self.value(r, feature)).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Returns a copy with identical labels and segments but new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, TimeseriesError> {
        Self::with_segments(
            values,
            self.labels.clone(),
            self.feature_names.clone(),
            self.segments.clone(),
        )
    }

    /// Keeps the segments for which `keep` returns true, re-basing offsets.
    /// Returns `None` when nothing is kept.
    pub fn filter_segments(&self, mut keep: impl FnMut(&Segment) -> bool) -> Option<Self> {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut segments = Vec::new();
        for seg in self.segments.iter().filter(|s| keep(s)) {
            segments.push(Segment {
                start: labels.len(),
                ..*seg
            });
            for r in seg.range() {
                values.extend_from_slice(self.row(r));
                labels.push(self.labels[r]);
            }
        }
        if labels.is_empty() {
            return None;
        }
        Self::with_segments(values, labels, self.feature_names.clone(), segments).ok()
    }

    /// Concatenates datasets with identical feature names.
    pub fn concat(parts: &[&TabularDataset]) -> Result<Self, TimeseriesError> {
        let first = parts
            .first()
            .ok_or_else(|| TimeseriesError::InvalidDataset("nothing to concatenate".into()))?;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut segments = Vec::new();
        for part in parts {
            if part.feature_names != first.feature_names {
                return Err(TimeseriesError::InvalidDataset(
                    "feature names differ between concatenated datasets".into(),
                ));
            }
            let offset = labels.len();
            values.extend_from_slice(&part.values);
            labels.extend_from_slice(&part.labels);
            segments.extend(part.segments.iter().map(|s| Segment {
                start: s.start + offset,
                ..*s
            }));
        }
        Self::with_segments(values, labels, first.feature_names.clone(), segments)
    }
}

/// How windows treat segment boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Windows never straddle two segments.
    #[default]
    PerSimulation,
    /// Segments are ignored; the dataset is treated as one series.
    Global,
}

/// Tensor of shape `(windows, ts, n)` stored row-major, plus one label per window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    values: Vec<f64>,
    labels: Vec<usize>,
    ts: usize,
    n_features: usize,
    feature_names: Vec<String>,
}

impl WindowedDataset {
    pub fn new(
        values: Vec<f64>,
        labels: Vec<usize>,
        ts: usize,
        feature_names: Vec<String>,
    ) -> Result<Self, TimeseriesError> {
        let n = feature_names.len();
        if ts == 0 || n == 0 {
            return Err(TimeseriesError::InvalidArgument(
                "ts and feature count must be positive".into(),
            ));
        }
        if values.len() != labels.len() * ts * n {
            return Err(TimeseriesError::InvalidDataset(format!(
                "value count {} does not match {} windows x {ts} steps x {n} features",
                values.len(),
                labels.len()
            )));
        }
        Ok(Self {
            values,
            labels,
            ts,
            n_features: n,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ts(&self) -> usize {
        self.ts
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `ts × n` block of window `i`, time-major.
    pub fn window(&self, i: usize) -> &[f64] {
        let stride = self.ts * self.n_features;
        &self.values[i * stride..(i + 1) * stride]
    }

    /// The `n` feature values of window `i` at time step `t`.
    pub fn step(&self, i: usize, t: usize) -> &[f64] {
        let w = self.window(i);
        &w[t * self.n_features..(t + 1) * self.n_features]
    }

    /// Concatenates datasets with matching `ts` and feature names.
    pub fn concat(parts: &[&WindowedDataset]) -> Result<Self, TimeseriesError> {
        let first = parts
            .first()
            .ok_or_else(|| TimeseriesError::InvalidDataset("nothing to concatenate".into()))?;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.ts != first.ts || p.feature_names != first.feature_names {
                return Err(TimeseriesError::InvalidDataset(
                    "windowed datasets have different shapes".into(),
                ));
            }
            values.extend_from_slice(&p.values);
            labels.extend_from_slice(&p.labels);
        }
        Self::new(values, labels, first.ts, first.feature_names.clone())
    }
}

/// Slides a window of `ts` rows over `data`.
pub fn window(
    data: &TabularDataset,
    ts: usize,
    policy: BoundaryPolicy,
) -> Result<WindowedDataset, TimeseriesError> {
    if ts < 1 {
        return Err(TimeseriesError::InvalidArgument(
            "time step must be at least 1".into(),
        ));
    }
    let ranges: Vec<std::ops::Range<usize>> = match policy {
        BoundaryPolicy::Global => vec![0..data.n_rows()],
        BoundaryPolicy::PerSimulation => data.segments().iter().map(Segment::range).collect(),
    };
    let shortest = ranges.iter().map(|r| r.len()).min().unwrap_or(0);
    if ts > shortest {
        return Err(TimeseriesError::EmptyWindow {
            ts,
            rows: shortest,
        });
    }
    let n = data.n_features();
    let total: usize = ranges.iter().map(|r| r.len() - ts + 1).sum();
    let mut values = Vec::with_capacity(total * ts * n);
    let mut labels = Vec::with_capacity(total);
    for range in ranges {
        for start in range.start..=range.end - ts {
            values.extend_from_slice(&data.values()[start * n..(start + ts) * n]);
            labels.push(data.labels()[start + ts - 1]);
        }
    }
    WindowedDataset::new(values, labels, ts, data.feature_names().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|j| format!("f{j}")).collect()
    }

    fn six_by_two() -> TabularDataset {
        let values: Vec<f64> = (0..12).map(|v| v as f64).collect();
        TabularDataset::new(values, vec![0, 0, 1, 2, 3, 4], names(2)).unwrap()
    }

    #[test]
    fn six_rows_three_steps() {
        let w = window(&six_by_two(), 3, BoundaryPolicy::Global).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.window(0), &[0., 1., 2., 3., 4., 5.]);
        assert_eq!(w.window(3), &[6., 7., 8., 9., 10., 11.]);
        assert_eq!(w.labels(), &[1, 2, 3, 4]);
    }

    #[test]
    fn single_step_is_identity() {
        let d = six_by_two();
        let w = window(&d, 1, BoundaryPolicy::PerSimulation).unwrap();
        assert_eq!(w.values(), d.values());
        assert_eq!(w.labels(), d.labels());
    }

    #[test]
    fn full_length_window() {
        let d = TabularDataset::new((0..5).map(f64::from).collect(), vec![0, 0, 0, 0, 7], names(1))
            .unwrap();
        let w = window(&d, 5, BoundaryPolicy::Global).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.labels(), &[7]);
    }

    #[test]
    fn errors() {
        let d = six_by_two();
        assert!(matches!(
            window(&d, 7, BoundaryPolicy::Global),
            Err(TimeseriesError::EmptyWindow { ts: 7, rows: 6 })
        ));
        assert!(matches!(
            window(&d, 0, BoundaryPolicy::Global),
            Err(TimeseriesError::InvalidArgument(_))
        ));
    }

    #[test]
    fn windows_do_not_straddle_segments() {
        let segs = vec![
            Segment { start: 0, len: 4, class: 0, run: 1 },
            Segment { start: 4, len: 3, class: 1, run: 1 },
        ];
        let d = TabularDataset::with_segments(
            (0..7).map(f64::from).collect(),
            vec![0, 0, 0, 0, 1, 1, 1],
            names(1),
            segs,
        )
        .unwrap();
        let w = window(&d, 3, BoundaryPolicy::PerSimulation).unwrap();
        assert_eq!(w.len(), 2 + 1);
        assert_eq!(w.window(2), &[4., 5., 6.]);
        // shortest segment bounds ts
        assert!(window(&d, 4, BoundaryPolicy::PerSimulation).is_err());
        assert_eq!(window(&d, 4, BoundaryPolicy::Global).unwrap().len(), 4);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(TabularDataset::new(vec![1.0, f64::NAN], vec![0, 0], names(1)).is_err());
    }

    proptest! {
        #[test]
        fn window_rows_recover_source(m in 1usize..30, n in 1usize..4, ts in 1usize..8, seed in any::<u64>()) {
            prop_assume!(ts <= m);
            let values: Vec<f64> = (0..m * n)
                .map(|i| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 / 7.0)
                .collect();
            let labels: Vec<usize> = (0..m).map(|i| i % 3).collect();
            let d = TabularDataset::new(values, labels, names(n)).unwrap();
            let w = window(&d, ts, BoundaryPolicy::Global).unwrap();
            prop_assert_eq!(w.len(), m - ts + 1);
            prop_assert_eq!(w.labels().len(), w.len());
            for i in 0..w.len() {
                for j in 0..ts {
                    prop_assert_eq!(w.step(i, j), d.row(i + j));
                }
                prop_assert_eq!(w.labels()[i], d.labels()[i + ts - 1]);
            }
        }
    }
}
