//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{ColumnMapping, PartitionConfig, RecordSource, SplitRecipe, SplitRule, StdConvention, SynthSpec};
use crate::federation::{build_topology, Paradigm, TopologyKind};
use crate::model::TrainConfig;
use crate::stationary::StationaryConfig;
use crate::timeseries::BoundaryPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Which preprocessing stages run before training. Windowing is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Base,
    FeatureEngineering,
    Stationary,
    All,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] = [Self::Base, Self::FeatureEngineering, Self::Stationary, Self::All];

    pub fn feature_engineering(self) -> bool {
        matches!(self, Self::FeatureEngineering | Self::All)
    }

    pub fn stationary(self) -> bool {
        matches!(self, Self::Stationary | Self::All)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::FeatureEngineering => "feature_engineering",
            Self::Stationary => "stationary",
            Self::All => "all",
        }
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        train_csv: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_csv: Option<PathBuf>,
        #[serde(default)]
        mapping: ColumnMapping,
    },
    Synthetic {
        #[serde(default)]
        synthetic: SynthSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub source: DataSource,
    /// Defaults to the TEP recipe for CSV input and to [`synthetic_recipe`]
    /// for synthetic input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<SplitRecipe>,
    /// Defaults to 10/5/5 runs per participant and class for CSV input and
    /// to spreading every run for synthetic input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionConfig>,
    #[serde(default)]
    pub std_convention: StdConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden1: usize,
    pub hidden2: usize,
    /// Inferred from the classes present after the recipe when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden1: 128,
            hidden2: 64,
            num_classes: None,
        }
    }
}

fn default_ts() -> usize {
    5
}

fn default_rounds() -> usize {
    10
}

fn default_participants() -> usize {
    5
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub pipeline: Pipeline,
    pub paradigm: Paradigm,
    pub topology: TopologyKind,
    #[serde(default = "default_participants")]
    pub participants: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hub: Option<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_ts")]
    pub ts: usize,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
}

/// Split used for synthetic data: the first half of the runs trains, the
/// next quarter validates, the rest tests; samples up to the fault onset are
/// dropped everywhere.
pub fn synthetic_recipe(spec: &SynthSpec) -> SplitRecipe {
    let runs = spec.runs_per_class as u32;
    let train = (runs / 2).max(1);
    let validation = ((runs - train) / 2).max(1);
    let test = runs.saturating_sub(train + validation).max(1);
    let first_sample = (spec.fault_onset as u32 + 1).min(spec.samples_per_run as u32);
    let rule = |first_run: u32, runs: u32| SplitRule {
        source: RecordSource::Train,
        first_run,
        runs,
        first_sample,
        last_sample: spec.samples_per_run as u32,
    };
    SplitRecipe {
        train: rule(1, train),
        validation: rule(1 + train, validation),
        test: rule(1 + train + validation, test),
        removed_classes: Vec::new(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads a config file; relative CSV paths are taken relative to it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let DataSource::Csv { train_csv, test_csv, .. } = &mut cfg.data.source {
            for p in std::iter::once(train_csv).chain(test_csv.iter_mut()) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Fills every default that depends on other fields.
    pub fn resolve(&mut self) {
        if self.data.recipe.is_none() {
            self.data.recipe = Some(match &self.data.source {
                DataSource::Csv { .. } => SplitRecipe::default(),
                DataSource::Synthetic { synthetic } => synthetic_recipe(synthetic),
            });
        }
        if self.data.partition.is_none() {
            self.data.partition = Some(self.partition());
        }
        if self.paradigm == Paradigm::Cfl && self.hub.is_none() {
            self.hub = Some(0);
        }
    }

    pub fn partition(&self) -> PartitionConfig {
        self.data.partition.unwrap_or(match &self.data.source {
            DataSource::Csv { .. } => PartitionConfig::default(),
            DataSource::Synthetic { .. } => PartitionConfig {
                train_runs: None,
                validation_runs: None,
                test_runs: None,
            },
        })
    }

    pub fn recipe(&self) -> SplitRecipe {
        self.data.recipe.clone().unwrap_or_else(|| match &self.data.source {
            DataSource::Csv { .. } => SplitRecipe::default(),
            DataSource::Synthetic { synthetic } => synthetic_recipe(synthetic),
        })
    }

    /// Number of participants that hold data.
    pub fn trainer_count(&self) -> usize {
        match self.paradigm {
            Paradigm::Cfl => self.participants.saturating_sub(1),
            _ => self.participants,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match (self.paradigm, self.topology) {
            (Paradigm::Cfl, TopologyKind::Star) => {}
            (Paradigm::Cfl, t) => return Err(invalid("topology", format!("CFL requires star, got {t}"))),
            (p, TopologyKind::Star) => return Err(invalid("topology", format!("{p} requires fully or ring, got star"))),
            _ => {}
        }
        if self.hub.is_some() && self.paradigm != Paradigm::Cfl {
            return Err(invalid("hub", "only CFL has a hub"));
        }
        build_topology(self.topology, self.participants, self.hub)
            .map_err(|e| invalid("participants", e.to_string()))?;
        if self.ts == 0 {
            return Err(invalid("ts", "must be positive"));
        }
        if self.pipeline.feature_engineering() && self.ts < 4 {
            return Err(invalid("ts", "feature engineering needs ts >= 4"));
        }
        if self.model.hidden1 == 0 || self.model.hidden2 == 0 {
            return Err(invalid("model", "hidden sizes must be positive"));
        }
        if self.model.num_classes == Some(0) {
            return Err(invalid("model.num_classes", "must be positive"));
        }
        self.train.validate().map_err(|e| invalid("train", e.to_string()))?;
        if !(self.stationary.alpha > 0.0 && self.stationary.alpha < 1.0) {
            return Err(invalid("stationary.alpha", "must lie in (0, 1)"));
        }
        if self.stationary.critical_value.is_none() {
            crate::stationary::adf::critical_value(self.stationary.alpha)
                .map_err(|e| invalid("stationary.alpha", e.to_string()))?;
        }
        if let DataSource::Synthetic { synthetic } = &self.data.source {
            synthetic.validate().map_err(|e| invalid("data.synthetic", e.to_string()))?;
        }
        Ok(())
    }

    /// SHA-256 of the TOML rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// One paradigm/topology pairing of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub paradigm: Paradigm,
    pub topology: TopologyKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub pipelines: Vec<Pipeline>,
    pub cells: Vec<GridCell>,
}

impl GridSpec {
    /// Four pipelines × {DFL-fully, DFL-ring, SDFL-fully, SDFL-ring, CFL-star}.
    pub fn standard() -> Self {
        let cell = |paradigm, topology| GridCell { paradigm, topology };
        Self {
            pipelines: Pipeline::ALL.to_vec(),
            cells: vec![
                cell(Paradigm::Dfl, TopologyKind::Fully),
                cell(Paradigm::Dfl, TopologyKind::Ring),
                cell(Paradigm::Sdfl, TopologyKind::Fully),
                cell(Paradigm::Sdfl, TopologyKind::Ring),
                cell(Paradigm::Cfl, TopologyKind::Star),
            ],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Every pipeline × cell combination applied to `base`, in order.
    pub fn expand(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &pipeline in &self.pipelines {
            for cell in &self.cells {
                let mut c = base.clone();
                c.pipeline = pipeline;
                c.paradigm = cell.paradigm;
                c.topology = cell.topology;
                if cell.paradigm != Paradigm::Cfl {
                    c.hub = None;
                }
                c.name = cell_name(&c);
                out.push(c);
            }
        }
        out
    }
}

pub fn cell_name(c: &ExperimentConfig) -> String {
    format!("{}-{}-{}", c.pipeline, c.paradigm.to_string().to_lowercase(), c.topology)
}
