//! End-to-end runs: data preparation, federation, reports and run
//! directories.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{cell_name, ConfigError, DataSource, ExperimentConfig, GridSpec};
use crate::data::{
    apply_split_recipe, fit_scaler, ingest_csv, partition, scale, synthesize, ClassMap, ColumnMapping, DataError,
    PartitionPlan, Scaler, SimulationRecord,
};
use crate::features::{engineer_features, FeatureError};
use crate::federation::{
    run_federation, FederationConfig, FederationError, LocalData, RoundRecord, Timing, TransportLedger,
};
use crate::metrics::{report, Evaluation, ExperimentReport, MetricsError, ReportMeta, Summary, TransportSummary, WindowCounts};
use crate::model::ModelConfig;
use crate::stationary::{apply_plan, fit_plan, StationaryError, StationaryPlan};
use crate::timeseries::{window, TimeseriesError};

pub const REPORT_FILE: &str = "report.json";
pub const LEDGER_FILE: &str = "ledger.csv";
pub const ROUNDS_FILE: &str = "rounds.csv";
pub const CONFIG_FILE: &str = "resolved-config.toml";
pub const CLASS_MAP_FILE: &str = "class-map.json";
pub const SCALER_FILE: &str = "scaler.json";
pub const STATIONARY_FILE: &str = "stationary-plan.json";
pub const PARTITION_FILE: &str = "partition-plan.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("stationary conversion: {0}")]
    Stationary(#[from] StationaryError),
    #[error("windowing: {0}")]
    Timeseries(#[from] TimeseriesError),
    #[error("feature engineering: {0}")]
    Features(#[from] FeatureError),
    #[error("federation: {0}")]
    Federation(#[from] FederationError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("integrity check failed for {file}: {message}")]
    Integrity { file: String, message: String },
}

impl ExperimentError {
    /// Errors caused by the configuration rather than by the run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::Config(ConfigError::Parse(_) | ConfigError::Invalid { .. })
                | Self::Federation(FederationError::InvalidConfig(_))
        )
    }

    pub fn is_integrity(&self) -> bool {
        matches!(self, Self::Integrity { .. })
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    })
}

/// Records of the training file, of the optional test file, and the
/// feature names.
pub type LoadedRecords = (Vec<SimulationRecord>, Option<Vec<SimulationRecord>>, Vec<String>);

pub fn load_records(cfg: &ExperimentConfig) -> Result<LoadedRecords, ExperimentError> {
    match &cfg.data.source {
        DataSource::Csv { train_csv, test_csv, mapping } => {
            let train = ingest_csv(train_csv, mapping)?;
            let test = test_csv.as_deref().map(|p| ingest_csv(p, mapping)).transpose()?;
            Ok((train, test, mapping.feature_columns.clone()))
        }
        DataSource::Synthetic { synthetic } => {
            let names = ColumnMapping::generic(synthetic.n_features).feature_columns;
            Ok((synthesize(synthetic)?, None, names))
        }
    }
}

/// Fitted preprocessing state, written next to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub class_map: ClassMap,
    pub scaler: Scaler,
    pub stationary_plan: StationaryPlan,
    pub partition_plan: PartitionPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub artifacts: Artifacts,
    /// One entry per training participant, in ascending participant order.
    pub local: Vec<LocalData>,
    pub model: ModelConfig,
}

/// Split, stationary conversion, scaling, partitioning, windowing and
/// feature engineering, in that order. Every fitted transform sees only
/// training rows.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    cfg.validate()?;
    let (train_file, test_file, names) = load_records(cfg)?;
    let split = apply_split_recipe(&train_file, test_file.as_deref(), &cfg.recipe(), &names)?;

    let stationary_plan = if cfg.pipeline.stationary() {
        let normal = split
            .class_map
            .index_of(0)
            .ok_or_else(|| invalid("pipeline", "stationary conversion needs normal (class 0) training runs"))?;
        fit_plan(&split.train, normal, &cfg.stationary)?
    } else {
        StationaryPlan::identity(&names, cfg.stationary.ma_window)
    };
    let train = apply_plan(&split.train, &stationary_plan)?;
    let validation = apply_plan(&split.validation, &stationary_plan)?;
    let test = apply_plan(&split.test, &stationary_plan)?;

    let scaler = fit_scaler(&train, cfg.data.std_convention)?;
    let train = scale(&train, &scaler)?;
    let validation = scale(&validation, &scaler)?;
    let test = scale(&test, &scaler)?;

    let (partition_plan, parts) = partition(&train, &validation, &test, cfg.trainer_count(), &cfg.partition())?;
    let mut local = Vec::with_capacity(parts.len());
    for p in parts {
        let mut w = [
            window(&p.train, cfg.ts, cfg.boundary)?,
            window(&p.validation, cfg.ts, cfg.boundary)?,
            window(&p.test, cfg.ts, cfg.boundary)?,
        ];
        if cfg.pipeline.feature_engineering() {
            for d in &mut w {
                *d = engineer_features(d)?;
            }
        }
        let [train, validation, test] = w;
        local.push(LocalData { train, validation, test });
    }

    let classes = split.class_map.len();
    let num_classes = cfg.model.num_classes.unwrap_or(classes);
    if num_classes < classes {
        return Err(invalid(
            "model.num_classes",
            format!("{num_classes} is fewer than the {classes} classes in the data"),
        ));
    }
    let model = ModelConfig {
        input_dim: local.first().map_or(names.len(), |l| l.train.n_features()),
        hidden1: cfg.model.hidden1,
        hidden2: cfg.model.hidden2,
        num_classes,
        ts: cfg.ts,
    };
    Ok(Prepared {
        artifacts: Artifacts {
            class_map: split.class_map,
            scaler,
            stationary_plan,
            partition_plan,
        },
        local,
        model,
    })
}

pub fn federation_config(cfg: &ExperimentConfig, model: ModelConfig) -> FederationConfig {
    FederationConfig {
        paradigm: cfg.paradigm,
        topology: cfg.topology,
        participants: cfg.participants,
        hub: cfg.hub,
        rounds: cfg.rounds,
        seed: cfg.seed,
        model,
        train: cfg.train,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Config with every default filled in.
    pub config: ExperimentConfig,
    pub artifacts: Artifacts,
    pub report: ExperimentReport,
    pub ledger: TransportLedger,
    pub timing: Timing,
}

/// Resolves `cfg`, prepares the data and runs the federation.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    on_round: impl FnMut(&RoundRecord),
) -> Result<RunOutput, ExperimentError> {
    let mut cfg = cfg.clone();
    cfg.resolve();
    cfg.validate()?;
    let prepared = prepare(&cfg)?;
    let fed = federation_config(&cfg, prepared.model);
    let trainers = fed.trainers();
    let windows = trainers
        .iter()
        .zip(&prepared.local)
        .map(|(&participant, l)| WindowCounts {
            participant,
            train: l.train.len(),
            validation: l.validation.len(),
            test: l.test.len(),
        })
        .collect();
    let (result, timing) = run_federation(&fed, prepared.local, on_round)?;
    let meta = ReportMeta {
        name: cfg.name.clone(),
        config_digest: cfg.digest(),
        pipeline: cfg.pipeline.to_string(),
        paradigm: cfg.paradigm.to_string(),
        topology: cfg.topology.to_string(),
        participants: cfg.participants,
        rounds: cfg.rounds,
        seed: cfg.seed,
        model: prepared.model,
        classes: prepared.artifacts.class_map.original.clone(),
        windows,
    };
    let report = report(meta, &result)?;
    Ok(RunOutput {
        config: cfg,
        artifacts: prepared.artifacts,
        report,
        ledger: result.ledger,
        timing,
    })
}

pub fn report_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

/// Per-round CSV for plotting; row 0 is the initial model.
pub fn rounds_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "completed_rounds",
        "aggregator",
        "payloads",
        "bytes",
        "mean_train_loss",
        "val_loss",
        "val_accuracy",
        "val_macro_precision",
        "val_macro_recall",
        "val_macro_f1",
        "val_weighted_precision",
        "val_weighted_recall",
        "val_weighted_f1",
    ])
    .expect("in-memory csv");
    for p in &report.curve {
        let detail = p.completed_rounds.checked_sub(1).map(|i| &report.rounds_detail[i]);
        let aggregator = detail.and_then(|d| d.aggregator).map(|a| a.to_string()).unwrap_or_default();
        let train_loss = detail
            .filter(|d| !d.train_loss.is_empty())
            .map(|d| (d.train_loss.iter().sum::<f64>() / d.train_loss.len() as f64).to_string())
            .unwrap_or_default();
        let s = &p.summary;
        w.write_record([
            p.completed_rounds.to_string(),
            aggregator,
            p.payloads.to_string(),
            p.bytes.to_string(),
            train_loss,
            s.loss.to_string(),
            s.accuracy.to_string(),
            s.macro_avg.precision.to_string(),
            s.macro_avg.recall.to_string(),
            s.macro_avg.f1.to_string(),
            s.weighted.precision.to_string(),
            s.weighted.recall.to_string(),
            s.weighted.f1.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

fn partial_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!(".{name}.partial"))
}

/// Fails unless `out` is absent or an empty directory.
pub fn check_out_dir(out: &Path) -> Result<(), ExperimentError> {
    if out.exists() {
        let mut entries = fs::read_dir(out).map_err(|e| io_err(out, e))?;
        if entries.next().is_some() {
            return Err(io_err(out, "output directory exists and is not empty"));
        }
    }
    Ok(())
}

/// Writes every artifact into a sibling staging directory, then renames it
/// to `out`. Nothing is left behind on failure.
pub fn write_run_dir(out: &Path, run: &RunOutput) -> Result<(), ExperimentError> {
    check_out_dir(out)?;
    let tmp = partial_dir(out);
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    }
    let result = (|| {
        fs::create_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
        let mut ledger = Vec::new();
        run.ledger.write_csv(&mut ledger)?;
        let files: [(&str, Vec<u8>); 9] = [
            (REPORT_FILE, report_json(&run.report).into_bytes()),
            (LEDGER_FILE, ledger),
            (ROUNDS_FILE, rounds_csv(&run.report).into_bytes()),
            (CONFIG_FILE, run.config.to_toml().into_bytes()),
            (CLASS_MAP_FILE, json(&run.artifacts.class_map).into_bytes()),
            (SCALER_FILE, json(&run.artifacts.scaler).into_bytes()),
            (STATIONARY_FILE, json(&run.artifacts.stationary_plan).into_bytes()),
            (PARTITION_FILE, json(&run.artifacts.partition_plan).into_bytes()),
            (TIMING_FILE, json(&run.timing).into_bytes()),
        ];
        for (name, bytes) in files {
            let p = tmp.join(name);
            fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        }
        if out.exists() {
            fs::remove_dir(out).map_err(|e| io_err(out, e))?;
        }
        fs::rename(&tmp, out).map_err(|e| io_err(out, e))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}

/// Runs `cfg` and writes its run directory.
pub fn run_to_dir(
    cfg: &ExperimentConfig,
    out: &Path,
    on_round: impl FnMut(&RoundRecord),
) -> Result<RunOutput, ExperimentError> {
    check_out_dir(out)?;
    let run = run_experiment(cfg, on_round)?;
    write_run_dir(out, &run)?;
    Ok(run)
}

fn read_file(dir: &Path, name: &str) -> Result<String, ExperimentError> {
    let p = dir.join(name);
    fs::read_to_string(&p).map_err(|e| corrupt(name, format!("cannot read {}: {e}", p.display())))
}

fn corrupt(file: &str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Integrity {
        file: file.to_string(),
        message: message.into(),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T, ExperimentError> {
    serde_json::from_str(&read_file(dir, name)?).map_err(|e| corrupt(name, e.to_string()))
}

/// What `inspect` verified about a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Inspection {
    pub report: ExperimentReport,
    pub ledger: TransportLedger,
}

impl fmt::Display for Inspection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        let m = &r.meta;
        writeln!(f, "run            {}", m.name)?;
        writeln!(f, "config digest  {}", m.config_digest)?;
        writeln!(f, "setup          {} / {} / {}", m.pipeline, m.paradigm, m.topology)?;
        writeln!(
            f,
            "participants   {} ({} training), {} rounds, seed {}",
            m.participants,
            r.trainers.len(),
            m.rounds,
            m.seed
        )?;
        writeln!(
            f,
            "model          input {} hidden {}/{} classes {} ts {}; {} parameters, {} bytes per payload",
            m.model.input_dim, m.model.hidden1, m.model.hidden2, m.model.num_classes, m.model.ts, r.parameter_count, r.payload_bytes
        )?;
        let s = &r.test_summary;
        writeln!(f, "test loss      {:.6}", s.loss)?;
        writeln!(f, "test accuracy  {:.4}", s.accuracy)?;
        writeln!(
            f,
            "test macro     precision {:.4} recall {:.4} f1 {:.4}",
            s.macro_avg.precision, s.macro_avg.recall, s.macro_avg.f1
        )?;
        writeln!(
            f,
            "test weighted  precision {:.4} recall {:.4} f1 {:.4}",
            s.weighted.precision, s.weighted.recall, s.weighted.f1
        )?;
        let t = &r.transport;
        writeln!(
            f,
            "transport      {} payloads, {} bytes sent, {} received, mean {:.1} bytes transmitted per node",
            t.payloads, t.bytes_sent, t.bytes_received, t.mean_bytes_transmitted
        )?;
        for p in &t.per_participant {
            writeln!(
                f,
                "  node {:<3}     sent {:>12}  received {:>12}  transmitted {:>12}",
                p.participant, p.bytes_sent, p.bytes_received, p.bytes_transmitted
            )?;
        }
        write!(f, "ledger sha256  {}", t.ledger_sha256)
    }
}

/// Re-reads a run directory and recomputes everything the report derives
/// from the ledger and the confusion matrices. Read-only.
pub fn inspect(dir: &Path) -> Result<Inspection, ExperimentError> {
    if !dir.is_dir() {
        return Err(io_err(dir, "not a run directory"));
    }
    let report: ExperimentReport = parse_json(dir, REPORT_FILE)?;
    let ledger_text = read_file(dir, LEDGER_FILE)?;
    let participants = report.meta.participants;
    let ledger = TransportLedger::read_csv(ledger_text.as_bytes(), participants)
        .map_err(|e| corrupt(LEDGER_FILE, e.to_string()))?;
    for (i, e) in ledger.entries.iter().enumerate() {
        if e.sender >= participants || e.receiver >= participants || e.origin >= participants {
            return Err(corrupt(LEDGER_FILE, format!("row {} names an unknown participant", i + 1)));
        }
        if e.bytes != report.payload_bytes {
            return Err(corrupt(
                LEDGER_FILE,
                format!("row {} records {} bytes, payloads are {}", i + 1, e.bytes, report.payload_bytes),
            ));
        }
        if e.sha256.len() != 64 || !e.sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(corrupt(LEDGER_FILE, format!("row {} has a malformed payload checksum", i + 1)));
        }
    }
    if ledger.digest() != report.transport.ledger_sha256 {
        return Err(corrupt(LEDGER_FILE, "ledger digest does not match the report"));
    }
    if TransportSummary::of(&ledger) != report.transport {
        return Err(corrupt(LEDGER_FILE, "transport totals do not match the report"));
    }
    if !ledger.is_conserved() {
        return Err(corrupt(LEDGER_FILE, "bytes sent and received differ"));
    }

    for e in &report.test {
        let again = Evaluation::from_confusion(e.eval.confusion.clone(), e.eval.loss)
            .map_err(|err| corrupt(REPORT_FILE, err.to_string()))?;
        if again != e.eval {
            return Err(corrupt(
                REPORT_FILE,
                format!("participant {} scores disagree with its confusion matrix", e.participant),
            ));
        }
    }
    let summary = Summary::of(&report.test).map_err(|e| corrupt(REPORT_FILE, e.to_string()))?;
    if summary != report.test_summary {
        return Err(corrupt(REPORT_FILE, "test summary is not the participant mean"));
    }

    let cfg = ExperimentConfig::from_toml(&read_file(dir, CONFIG_FILE)?).map_err(|e| corrupt(CONFIG_FILE, e.to_string()))?;
    if cfg.digest() != report.meta.config_digest {
        return Err(corrupt(CONFIG_FILE, "config digest does not match the report"));
    }
    let _: ClassMap = parse_json(dir, CLASS_MAP_FILE)?;
    let _: Scaler = parse_json(dir, SCALER_FILE)?;
    let _: StationaryPlan = parse_json(dir, STATIONARY_FILE)?;
    let _: PartitionPlan = parse_json(dir, PARTITION_FILE)?;
    read_file(dir, ROUNDS_FILE)?;
    Ok(Inspection { report, ledger })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub config: ExperimentConfig,
    pub dir: PathBuf,
    pub result: Result<ExperimentReport, String>,
}

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TABLE_FILE: &str = "summary.md";

/// Runs every cell of `grid` over `base` into `out/<cell name>/`, using up
/// to `jobs` threads. A failing cell does not stop the others.
pub fn run_grid(
    base: &ExperimentConfig,
    grid: &GridSpec,
    out: &Path,
    jobs: usize,
) -> Result<Vec<CellOutcome>, ExperimentError> {
    let cells = grid.expand(base);
    if cells.is_empty() {
        return Err(invalid("grid", "no cells"));
    }
    let mut names: Vec<String> = cells.iter().map(cell_name).collect();
    names.sort();
    names.dedup();
    if names.len() != cells.len() {
        return Err(invalid("grid", "cells repeat"));
    }
    check_out_dir(out)?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, cells.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = cells.get(i) else { break };
                let dir = out.join(&cfg.name);
                let result = run_to_dir(cfg, &dir, |_| {}).map(|r| r.report).map_err(|e| e.to_string());
                slots.lock().expect("no panics while holding the lock")[i] = Some(CellOutcome {
                    config: cfg.clone(),
                    dir,
                    result,
                });
            });
        }
    });
    let outcomes: Vec<CellOutcome> = slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|o| o.expect("every cell ran"))
        .collect();
    let p = out.join(SUMMARY_FILE);
    fs::write(&p, summary_csv(&outcomes)).map_err(|e| io_err(&p, e))?;
    let p = out.join(TABLE_FILE);
    fs::write(&p, summary_table(&outcomes)).map_err(|e| io_err(&p, e))?;
    Ok(outcomes)
}

pub fn summary_csv(outcomes: &[CellOutcome]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cell",
        "pipeline",
        "paradigm",
        "topology",
        "status",
        "precision",
        "recall",
        "f1",
        "weighted_precision",
        "weighted_recall",
        "weighted_f1",
        "accuracy",
        "total_bytes",
        "mean_bytes_transmitted",
        "error",
    ])
    .expect("in-memory csv");
    for o in outcomes {
        let c = &o.config;
        let mut row = vec![
            c.name.clone(),
            c.pipeline.to_string(),
            c.paradigm.to_string(),
            c.topology.to_string(),
        ];
        match &o.result {
            Ok(r) => {
                let s = &r.test_summary;
                row.push("ok".into());
                for v in [
                    s.macro_avg.precision,
                    s.macro_avg.recall,
                    s.macro_avg.f1,
                    s.weighted.precision,
                    s.weighted.recall,
                    s.weighted.f1,
                    s.accuracy,
                ] {
                    row.push(v.to_string());
                }
                row.push(r.transport.bytes_sent.to_string());
                row.push(r.transport.mean_bytes_transmitted.to_string());
                row.push(String::new());
            }
            Err(e) => {
                row.push("failed".into());
                row.extend(std::iter::repeat(String::new()).take(9));
                row.push(e.clone());
            }
        }
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

/// Markdown table: one row per paradigm/topology cell, one
/// precision/recall/F1 column group per pipeline (macro averages).
pub fn summary_table(outcomes: &[CellOutcome]) -> String {
    let mut pipelines = Vec::new();
    let mut rows: Vec<(String, String)> = Vec::new();
    for o in outcomes {
        if !pipelines.contains(&o.config.pipeline) {
            pipelines.push(o.config.pipeline);
        }
        let row = (o.config.paradigm.to_string(), o.config.topology.to_string());
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    let mut s = String::from("| Paradigm | Topology |");
    for p in &pipelines {
        s.push_str(&format!(" {p} P | {p} R | {p} F1 |"));
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---|---|---|".repeat(pipelines.len()));
    s.push('\n');
    for (paradigm, topology) in &rows {
        s.push_str(&format!("| {paradigm} | {topology} |"));
        for p in &pipelines {
            let cell = outcomes.iter().find(|o| {
                o.config.pipeline == *p
                    && o.config.paradigm.to_string() == *paradigm
                    && o.config.topology.to_string() == *topology
            });
            match cell.map(|o| &o.result) {
                Some(Ok(r)) => {
                    let m = &r.test_summary.macro_avg;
                    s.push_str(&format!(" {:.4} | {:.4} | {:.4} |", m.precision, m.recall, m.f1));
                }
                Some(Err(_)) => s.push_str(" failed | failed | failed |"),
                None => s.push_str(" - | - | - |"),
            }
        }
        s.push('\n');
    }
    s
}
