//! Confusion matrices, precision / recall / F1 and experiment reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::federation::{FederationResult, ParticipantEval, RoundRecord, TransportLedger};
use crate::model::{payload_len, ModelConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{preds} predictions but {labels} labels")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("class id {id} outside {classes} classes")]
    ClassOutOfRange { id: usize, classes: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("missing results: {0}")]
    MissingResults(String),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

pub fn confusion(preds: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if preds.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&p, &y) in preds.iter().zip(labels) {
        let id = p.max(y);
        if id >= classes {
            return Err(MetricsError::ClassOutOfRange { id, classes });
        }
        cm.counts[y][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    #[default]
    Macro,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-class scores; 0/0 is taken as 0.
pub fn per_class(cm: &ConfusionMatrix) -> Vec<Prf> {
    (0..cm.classes)
        .map(|c| {
            let tp = cm.counts[c][c];
            let precision = ratio(tp, cm.predicted(c));
            let recall = ratio(tp, cm.support(c));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            Prf { precision, recall, f1 }
        })
        .collect()
}

/// Averaged scores. Classes that never occur and are never predicted are
/// left out of the macro mean; their weight is zero in the weighted mean
/// anyway.
pub fn precision_recall_f1(cm: &ConfusionMatrix, averaging: Averaging) -> Result<Prf, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let scores = per_class(cm);
    let mut acc = Prf::default();
    let mut weight_sum = 0.0;
    for (c, s) in scores.iter().enumerate() {
        let w = match averaging {
            Averaging::Macro if cm.support(c) == 0 && cm.predicted(c) == 0 => 0.0,
            Averaging::Macro => 1.0,
            Averaging::Weighted => cm.support(c) as f64,
        };
        acc.precision += w * s.precision;
        acc.recall += w * s.recall;
        acc.f1 += w * s.f1;
        weight_sum += w;
    }
    Ok(Prf {
        precision: acc.precision / weight_sum,
        recall: acc.recall / weight_sum,
        f1: acc.f1 / weight_sum,
    })
}

/// Macro and weighted scores of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub weighted: Prf,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn from_confusion(cm: ConfusionMatrix, loss: f64) -> Result<Self, MetricsError> {
        let diag: u64 = (0..cm.classes).map(|c| cm.counts[c][c]).sum();
        Ok(Self {
            loss,
            accuracy: ratio(diag, cm.total()),
            macro_avg: precision_recall_f1(&cm, Averaging::Macro)?,
            weighted: precision_recall_f1(&cm, Averaging::Weighted)?,
            confusion: cm,
        })
    }
}

/// Arithmetic mean over participants of every scalar score.
pub fn mean_evaluation(evals: &[&Evaluation]) -> Result<(f64, f64, Prf, Prf), MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::MissingResults("no participant evaluations".into()));
    }
    let k = evals.len() as f64;
    let mean_prf = |f: &dyn Fn(&Evaluation) -> Prf| {
        let mut p = Prf::default();
        for e in evals {
            let s = f(e);
            p.precision += s.precision / k;
            p.recall += s.recall / k;
            p.f1 += s.f1 / k;
        }
        p
    };
    Ok((
        evals.iter().map(|e| e.loss).sum::<f64>() / k,
        evals.iter().map(|e| e.accuracy).sum::<f64>() / k,
        mean_prf(&|e| e.macro_avg),
        mean_prf(&|e| e.weighted),
    ))
}

/// Mean test scores over participants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub loss: f64,
    pub accuracy: f64,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub weighted: Prf,
}

impl Summary {
    pub fn of(evals: &[ParticipantEval]) -> Result<Self, MetricsError> {
        let refs: Vec<&Evaluation> = evals.iter().map(|e| &e.eval).collect();
        let (loss, accuracy, macro_avg, weighted) = mean_evaluation(&refs)?;
        Ok(Self { loss, accuracy, macro_avg, weighted })
    }
}

/// Validation scores after `completed_rounds` rounds (0 = initial model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub completed_rounds: usize,
    #[serde(flatten)]
    pub summary: Summary,
    pub payloads: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantTransport {
    pub participant: usize,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub bytes_transmitted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSummary {
    pub payloads: usize,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    /// Mean over all nodes of sent + received bytes.
    pub mean_bytes_transmitted: f64,
    pub per_participant: Vec<ParticipantTransport>,
    pub ledger_sha256: String,
}

impl TransportSummary {
    pub fn of(ledger: &TransportLedger) -> Self {
        let totals = ledger.totals();
        let per_participant: Vec<ParticipantTransport> = totals
            .iter()
            .enumerate()
            .map(|(participant, t)| ParticipantTransport {
                participant,
                bytes_sent: t.bytes_sent,
                bytes_received: t.bytes_received,
                bytes_transmitted: t.bytes_transmitted(),
            })
            .collect();
        let sum: u64 = per_participant.iter().map(|p| p.bytes_transmitted).sum();
        Self {
            payloads: ledger.entries.len(),
            bytes_sent: ledger.total_sent(),
            bytes_received: ledger.total_received(),
            mean_bytes_transmitted: if totals.is_empty() { 0.0 } else { sum as f64 / totals.len() as f64 },
            per_participant,
            ledger_sha256: ledger.digest(),
        }
    }
}

/// Identity and sizing of a run, supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub name: String,
    pub config_digest: String,
    pub pipeline: String,
    pub paradigm: String,
    pub topology: String,
    pub participants: usize,
    pub rounds: usize,
    pub seed: u64,
    pub model: ModelConfig,
    pub classes: Vec<u32>,
    pub windows: Vec<WindowCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub participant: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

pub const AVERAGING_NOTE: &str =
    "macro averaging is primary (classes absent from both labels and predictions are skipped); support-weighted averages are reported alongside";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub averaging: String,
    pub parameter_count: usize,
    pub payload_bytes: usize,
    pub trainers: Vec<usize>,
    /// Mean over trainers of the final test evaluation.
    pub test_summary: Summary,
    pub test: Vec<ParticipantEval>,
    pub curve: Vec<CurvePoint>,
    pub initial: Vec<ParticipantEval>,
    pub rounds_detail: Vec<RoundRecord>,
    pub transport: TransportSummary,
}

/// Assembles the report; experiment-level numbers are plain means over the
/// training participants.
pub fn report(meta: ReportMeta, result: &FederationResult) -> Result<ExperimentReport, MetricsError> {
    if result.test.len() != result.trainers.len() || result.initial.len() != result.trainers.len() {
        return Err(MetricsError::MissingResults(format!(
            "{} trainers, {} test and {} initial evaluations",
            result.trainers.len(),
            result.test.len(),
            result.initial.len()
        )));
    }
    let mut curve = vec![CurvePoint {
        completed_rounds: 0,
        summary: Summary::of(&result.initial)?,
        payloads: 0,
        bytes: 0,
    }];
    for r in &result.rounds {
        if r.validation.len() != result.trainers.len() {
            return Err(MetricsError::MissingResults(format!("round {} lacks evaluations", r.round)));
        }
        curve.push(CurvePoint {
            completed_rounds: r.round + 1,
            summary: Summary::of(&r.validation)?,
            payloads: r.payloads,
            bytes: r.bytes,
        });
    }
    Ok(ExperimentReport {
        averaging: AVERAGING_NOTE.to_string(),
        parameter_count: meta.model.parameter_count(),
        payload_bytes: payload_len(&meta.model),
        trainers: result.trainers.clone(),
        test_summary: Summary::of(&result.test)?,
        test: result.test.clone(),
        curve,
        initial: result.initial.clone(),
        rounds_detail: result.rounds.clone(),
        transport: TransportSummary::of(&result.ledger),
        meta,
    })
}
