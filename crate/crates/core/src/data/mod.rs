//! Tennessee-Eastman style CSV ingestion, the split/trim/scale recipe,
//! participant partitioning and a synthetic stand-in generator.

mod partition;
mod recipe;
mod scaler;
mod synth;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::{Segment, TabularDataset, TimeseriesError};

pub use partition::{partition, ParticipantAssignment, ParticipantData, PartitionConfig, PartitionPlan, RunKey};
pub use recipe::{apply_split_recipe, ClassMap, RecordSource, SplitData, SplitRecipe, SplitRule};
pub use scaler::{fit_scaler, scale, Scaler, StdConvention};
pub use synth::{synthesize, SynthSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Recipe(String),
    #[error("class {class} has {available} runs in the {split} split, {needed} needed")]
    Shortfall {
        class: u32,
        split: String,
        needed: usize,
        available: usize,
    },
    #[error(transparent)]
    Dataset(#[from] TimeseriesError),
}

/// One sampled row of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    /// 0 is normal operation.
    pub fault_class: u32,
    pub simulation_run: u32,
    /// 1-based position within the run.
    pub sample_index: u32,
    pub features: Vec<f64>,
}

/// Maps CSV header names onto record fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub fault_column: String,
    pub run_column: String,
    pub sample_column: String,
    pub feature_columns: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl Default for ColumnMapping {
    /// Header layout of the Rieth et al. TEP export: 41 measured and 11
    /// manipulated variables.
    fn default() -> Self {
        let feature_columns = (1..=41)
            .map(|i| format!("xmeas_{i}"))
            .chain((1..=11).map(|i| format!("xmv_{i}")))
            .collect();
        Self::with_features(feature_columns)
    }
}

impl ColumnMapping {
    pub fn with_features(feature_columns: Vec<String>) -> Self {
        Self {
            fault_column: "faultNumber".into(),
            run_column: "simulationRun".into(),
            sample_column: "sample".into(),
            feature_columns,
            delimiter: ',',
        }
    }

    /// Generic `x_1 .. x_n` feature names, used for synthetic data.
    pub fn generic(n: usize) -> Self {
        Self::with_features((1..=n).map(|i| format!("x_{i}")).collect())
    }

    fn delimiter_byte(&self) -> Result<u8, DataError> {
        u8::try_from(self.delimiter)
            .map_err(|_| DataError::InvalidArgument(format!("delimiter {:?} is not ASCII", self.delimiter)))
    }
}

pub fn ingest_csv(path: &Path, mapping: &ColumnMapping) -> Result<Vec<SimulationRecord>, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, mapping)
}

/// Parses records and sorts them by (class, run, sample).
pub fn read_csv<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<Vec<SimulationRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter_byte()?)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| DataError::Parse { line: 1, message: e.to_string() })?
        .clone();
    let width = header.len();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim().trim_matches('"') == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let fault_idx = find(&mapping.fault_column)?;
    let run_idx = find(&mapping.run_column)?;
    let sample_idx = find(&mapping.sample_column)?;
    let feature_idx = mapping
        .feature_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>, _>>()?;
    if feature_idx.is_empty() {
        return Err(DataError::InvalidArgument("no feature columns configured".into()));
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(DataError::Parse {
                line,
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        let cell = |i: usize| -> Result<f64, DataError> {
            let raw = rec[i].trim();
            raw.parse::<f64>().map_err(|_| DataError::Parse {
                line,
                message: format!("column `{}`: `{raw}` is not numeric", &header[i]),
            })
        };
        let id = |i: usize| -> Result<u32, DataError> {
            let v = cell(i)?;
            if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                return Err(DataError::Parse {
                    line,
                    message: format!("column `{}`: `{v}` is not a non-negative integer", &header[i]),
                });
            }
            Ok(v as u32)
        };
        let features = feature_idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>, _>>()?;
        if let Some(j) = features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Parse {
                line,
                message: format!("column `{}` is not finite", mapping.feature_columns[j]),
            });
        }
        out.push(SimulationRecord {
            fault_class: id(fault_idx)?,
            simulation_run: id(run_idx)?,
            sample_index: id(sample_idx)?,
            features,
        });
    }
    sort_records(&mut out);
    Ok(out)
}

pub fn sort_records(records: &mut [SimulationRecord]) {
    records.sort_by_key(|r| (r.fault_class, r.simulation_run, r.sample_index));
}

pub fn write_csv<W: Write>(writer: W, records: &[SimulationRecord], mapping: &ColumnMapping) -> Result<(), DataError> {
    let io = |e: csv::Error| DataError::InvalidArgument(format!("writing CSV: {e}"));
    let mut w = csv::WriterBuilder::new()
        .delimiter(mapping.delimiter_byte()?)
        .from_writer(writer);
    let mut header = vec![
        mapping.fault_column.clone(),
        mapping.run_column.clone(),
        mapping.sample_column.clone(),
    ];
    header.extend(mapping.feature_columns.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for r in records {
        if r.features.len() != mapping.feature_columns.len() {
            return Err(DataError::InvalidArgument(format!(
                "record has {} features, mapping has {}",
                r.features.len(),
                mapping.feature_columns.len()
            )));
        }
        let mut row = vec![r.fault_class.to_string(), r.simulation_run.to_string(), r.sample_index.to_string()];
        row.extend(r.features.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| DataError::InvalidArgument(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Groups records into one segment per (class, run), labelling rows with
/// `label_of(class)`. Records must already be sorted.
pub(crate) fn records_to_dataset<'a>(
    records: impl IntoIterator<Item = &'a SimulationRecord>,
    feature_names: &[String],
    label_of: impl Fn(u32) -> usize,
) -> Result<TabularDataset, DataError> {
    let n = feature_names.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    for r in records {
        if r.features.len() != n {
            return Err(DataError::InvalidArgument(format!(
                "record of class {} run {} has {} features, expected {n}",
                r.fault_class,
                r.simulation_run,
                r.features.len()
            )));
        }
        match segments.last_mut() {
            Some(s) if s.class == r.fault_class && s.run == r.simulation_run => s.len += 1,
            _ => segments.push(Segment {
                start: labels.len(),
                len: 1,
                class: r.fault_class,
                run: r.simulation_run,
            }),
        }
        values.extend_from_slice(&r.features);
        labels.push(label_of(r.fault_class));
    }
    Ok(TabularDataset::with_segments(values, labels, feature_names.to_vec(), segments)?)
}

/// Record counts per (class, run).
pub fn run_inventory(records: &[SimulationRecord]) -> BTreeMap<(u32, u32), usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry((r.fault_class, r.simulation_run)).or_insert(0) += 1;
    }
    out
}
