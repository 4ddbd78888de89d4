//! Train/validation/test selection, trimming and class removal.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{records_to_dataset, DataError, SimulationRecord};
use crate::timeseries::TabularDataset;

/// Which input file a split draws its runs from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSource {
    Train,
    Test,
}

/// Selects runs `first_run .. first_run + runs` of every class and keeps the
/// 1-based samples `first_sample ..= last_sample` of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRule {
    pub source: RecordSource,
    pub first_run: u32,
    pub runs: u32,
    pub first_sample: u32,
    pub last_sample: u32,
}

impl SplitRule {
    pub fn retained_per_run(&self) -> usize {
        (self.last_sample - self.first_sample + 1) as usize
    }

    fn selects_run(&self, run: u32) -> bool {
        run >= self.first_run && run - self.first_run < self.runs
    }

    fn validate(&self, name: &str) -> Result<(), DataError> {
        if self.runs == 0 || self.first_sample == 0 || self.last_sample < self.first_sample {
            return Err(DataError::InvalidArgument(format!(
                "{name} rule needs runs > 0 and 1 <= first_sample <= last_sample"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecipe {
    pub train: SplitRule,
    pub validation: SplitRule,
    pub test: SplitRule,
    #[serde(default)]
    pub removed_classes: Vec<u32>,
}

impl Default for SplitRecipe {
    /// Training: runs 1-60, samples 21-500. Validation: runs 61-90, same
    /// trim. Test: runs 1-30 of the test file, samples 161-500. Faults 3, 9
    /// and 15 are dropped.
    fn default() -> Self {
        Self {
            train: SplitRule { source: RecordSource::Train, first_run: 1, runs: 60, first_sample: 21, last_sample: 500 },
            validation: SplitRule { source: RecordSource::Train, first_run: 61, runs: 30, first_sample: 21, last_sample: 500 },
            test: SplitRule { source: RecordSource::Test, first_run: 1, runs: 30, first_sample: 161, last_sample: 500 },
            removed_classes: vec![3, 9, 15],
        }
    }
}

/// Dense class index ↔ original fault id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    /// `original[i]` is the fault id labelled `i`.
    pub original: Vec<u32>,
}

impl ClassMap {
    pub fn new(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self { original: ids }
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn index_of(&self, class: u32) -> Option<usize> {
        self.original.binary_search(&class).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub train: TabularDataset,
    pub validation: TabularDataset,
    pub test: TabularDataset,
    pub class_map: ClassMap,
}

type Runs<'a> = BTreeMap<(u32, u32), Vec<&'a SimulationRecord>>;

fn select<'a>(records: &'a [SimulationRecord], rule: &SplitRule, removed: &BTreeSet<u32>, name: &str) -> Result<Runs<'a>, DataError> {
    let mut runs: Runs<'a> = BTreeMap::new();
    for r in records {
        if removed.contains(&r.fault_class) || !rule.selects_run(r.simulation_run) {
            continue;
        }
        if (rule.first_sample..=rule.last_sample).contains(&r.sample_index) {
            runs.entry((r.fault_class, r.simulation_run)).or_default().push(r);
        }
    }
    let want = rule.retained_per_run();
    for ((class, run), rows) in &mut runs {
        rows.sort_by_key(|r| r.sample_index);
        let distinct = rows.windows(2).all(|w| w[0].sample_index != w[1].sample_index);
        if rows.len() != want || !distinct {
            return Err(DataError::Recipe(format!(
                "{name} split: class {class} run {run} has {} of the samples {}..={} required",
                rows.len(),
                rule.first_sample,
                rule.last_sample
            )));
        }
    }
    if runs.is_empty() {
        return Err(DataError::Recipe(format!("{name} split selects no runs")));
    }
    Ok(runs)
}

/// Applies `recipe` to the training-file and (optional) test-file records.
pub fn apply_split_recipe(
    train_file: &[SimulationRecord],
    test_file: Option<&[SimulationRecord]>,
    recipe: &SplitRecipe,
    feature_names: &[String],
) -> Result<SplitData, DataError> {
    let removed: BTreeSet<u32> = recipe.removed_classes.iter().copied().collect();
    let source = |rule: &SplitRule, name: &str| -> Result<&[SimulationRecord], DataError> {
        match rule.source {
            RecordSource::Train => Ok(train_file),
            RecordSource::Test => test_file
                .ok_or_else(|| DataError::Recipe(format!("{name} split reads the test file, none given"))),
        }
    };
    let mut selected = Vec::new();
    for (name, rule) in [("train", &recipe.train), ("validation", &recipe.validation), ("test", &recipe.test)] {
        rule.validate(name)?;
        selected.push(select(source(rule, name)?, rule, &removed, name)?);
    }
    if recipe.train.source == recipe.validation.source {
        let overlap = selected[0].keys().find(|k| selected[1].contains_key(k));
        if let Some((c, r)) = overlap {
            return Err(DataError::Recipe(format!("class {c} run {r} is in both train and validation")));
        }
    }
    let class_map = ClassMap::new(selected.iter().flat_map(|s| s.keys().map(|k| k.0)).collect());
    let label = |c: u32| class_map.index_of(c).expect("class map built from the same runs");
    let mut out = selected.iter().map(|runs| {
        records_to_dataset(runs.values().flatten().copied(), feature_names, label)
    });
    let train = out.next().expect("three splits")?;
    let validation = out.next().expect("three splits")?;
    let test = out.next().expect("three splits")?;
    Ok(SplitData { train, validation, test, class_map })
}
