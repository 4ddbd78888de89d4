//! Round-robin assignment of simulation runs to participants.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::timeseries::TabularDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub class: u32,
    pub run: u32,
}

/// Runs per participant and class for each split; `None` (an omitted key in
/// a config file) spreads every available run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_runs: Option<usize>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            train_runs: Some(10),
            validation_runs: Some(5),
            test_runs: Some(5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantAssignment {
    pub participant: usize,
    pub train: Vec<RunKey>,
    pub validation: Vec<RunKey>,
    pub test: Vec<RunKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub participants: Vec<ParticipantAssignment>,
}

impl PartitionPlan {
    /// True when no run is assigned twice, across participants or splits.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.participants.iter().all(|p| {
            [(0, &p.train), (0, &p.validation), (1, &p.test)]
                .into_iter()
                .all(|(src, keys)| keys.iter().all(|k| seen.insert((src, *k))))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantData {
    pub train: TabularDataset,
    pub validation: TabularDataset,
    pub test: TabularDataset,
}

fn assign(
    data: &TabularDataset,
    per_participant: Option<usize>,
    n: usize,
    split: &str,
) -> Result<Vec<Vec<RunKey>>, DataError> {
    let mut by_class: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for s in data.segments() {
        by_class.entry(s.class).or_default().push(s.run);
    }
    let mut out = vec![Vec::new(); n];
    for (class, mut runs) in by_class {
        runs.sort_unstable();
        runs.dedup();
        let needed = per_participant.map_or(n, |k| k * n);
        if runs.len() < needed {
            return Err(DataError::Shortfall {
                class,
                split: split.to_string(),
                needed,
                available: runs.len(),
            });
        }
        let take = per_participant.map_or(runs.len(), |k| k * n);
        for (i, &run) in runs[..take].iter().enumerate() {
            out[i % n].push(RunKey { class, run });
        }
    }
    Ok(out)
}

/// Deals runs of each class round-robin by ascending run id: with `n`
/// participants, the i-th run goes to participant `i mod n`.
pub fn partition(
    train: &TabularDataset,
    validation: &TabularDataset,
    test: &TabularDataset,
    n_participants: usize,
    cfg: &PartitionConfig,
) -> Result<(PartitionPlan, Vec<ParticipantData>), DataError> {
    if n_participants == 0 {
        return Err(DataError::InvalidArgument("at least one participant is required".into()));
    }
    let tr = assign(train, cfg.train_runs, n_participants, "train")?;
    let va = assign(validation, cfg.validation_runs, n_participants, "validation")?;
    let te = assign(test, cfg.test_runs, n_participants, "test")?;
    let mut plan = Vec::with_capacity(n_participants);
    let mut parts = Vec::with_capacity(n_participants);
    for (k, ((tr, va), te)) in tr.into_iter().zip(va).zip(te).enumerate() {
        let pick = |data: &TabularDataset, keys: &[RunKey]| {
            let set: BTreeSet<RunKey> = keys.iter().copied().collect();
            data.filter_segments(|s| set.contains(&RunKey { class: s.class, run: s.run }))
                .expect("every participant receives at least one run per class")
        };
        parts.push(ParticipantData {
            train: pick(train, &tr),
            validation: pick(validation, &va),
            test: pick(test, &te),
        });
        plan.push(ParticipantAssignment { participant: k, train: tr, validation: va, test: te });
    }
    Ok((PartitionPlan { participants: plan }, parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Segment;

    fn runs(class: u32, ids: impl IntoIterator<Item = u32>) -> TabularDataset {
        let ids: Vec<u32> = ids.into_iter().collect();
        let segments = ids
            .iter()
            .enumerate()
            .map(|(i, &run)| Segment { start: 2 * i, len: 2, class, run })
            .collect();
        let m = 2 * ids.len();
        TabularDataset::with_segments(vec![1.0; m], vec![0; m], vec!["a".into()], segments).unwrap()
    }

    #[test]
    fn fifty_runs_over_five() {
        let d = runs(0, 1..=60);
        let cfg = PartitionConfig { train_runs: Some(10), validation_runs: Some(1), test_runs: Some(1) };
        let (plan, parts) = partition(&d, &d, &d, 5, &cfg).unwrap();
        for k in 0..5 {
            let got: Vec<u32> = plan.participants[k].train.iter().map(|r| r.run).collect();
            let want: Vec<u32> = (0..10).map(|i| 1 + k as u32 + 5 * i).collect();
            assert_eq!(got, want);
            assert_eq!(parts[k].train.n_rows(), 20);
        }
    }

    #[test]
    fn single_participant_gets_everything() {
        let d = runs(2, [4, 9, 1]);
        let cfg = PartitionConfig { train_runs: None, validation_runs: None, test_runs: None };
        let (plan, parts) = partition(&d, &d, &d, 1, &cfg).unwrap();
        assert_eq!(plan.participants[0].train.len(), 3);
        assert_eq!(parts[0].train, d);
    }

    #[test]
    fn shortfall_names_class_and_split() {
        let d = runs(7, 1..=9);
        let err = partition(&d, &d, &d, 1, &PartitionConfig::default()).unwrap_err();
        match err {
            DataError::Shortfall { class, split, needed, available } => {
                assert_eq!((class, split.as_str(), needed, available), (7, "train", 10, 9));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn plans_are_disjoint() {
        let tr = runs(0, 1..=20);
        let va = runs(0, 21..=30);
        let (plan, _) = partition(&tr, &va, &tr, 5, &PartitionConfig { train_runs: Some(4), validation_runs: Some(2), test_runs: Some(1) }).unwrap();
        assert!(plan.is_disjoint());
    }
}
