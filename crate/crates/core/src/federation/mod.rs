//! Round-based federated training over an in-memory network.
//!
//! Three paradigms are simulated:
//!
//! * **DFL**: every participant trains, sends its model to each neighbour and
//!   averages its own model with the ones it received.
//! * **SDFL**: every participant trains; the aggregator of round `r` is
//!   participant `r mod n`. Models travel to it along shortest paths (each
//!   hop is a payload), it averages them and sends the result back along the
//!   same routes.
//! * **CFL**: a star whose hub is a pure server. Leaves train and upload, the
//!   hub averages and broadcasts.
//!
//! Everything runs sequentially in participant-id order and every payload is
//! the serialized model, so runs are bit-reproducible and byte counts exact.

mod aggregate;
mod ledger;
mod topology;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggregate::{fedavg, AggregationInput};
pub use ledger::{payload_digest, LedgerEntry, TransportLedger, TransportTotals};
pub use topology::{build_topology, Topology, TopologyKind};

use crate::metrics::{confusion, Evaluation, MetricsError};
use crate::model::{self, AdamState, ModelConfig, ModelError, ModelParameters, TrainConfig};
use crate::timeseries::WindowedDataset;

#[derive(Debug, Error)]
pub enum FederationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("participant {participant}: {source}")]
    Participant {
        participant: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("transport: {0}")]
    Transport(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Dfl,
    Sdfl,
    Cfl,
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dfl => "DFL",
            Self::Sdfl => "SDFL",
            Self::Cfl => "CFL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FederationConfig {
    pub paradigm: Paradigm,
    pub topology: TopologyKind,
    /// Number of nodes in the topology, the CFL hub included.
    pub participants: usize,
    /// CFL server id; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hub: Option<usize>,
    pub rounds: usize,
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl FederationConfig {
    pub fn validate(&self) -> Result<Topology, FederationError> {
        match (self.paradigm, self.topology) {
            (Paradigm::Cfl, TopologyKind::Star) => {}
            (Paradigm::Cfl, t) => {
                return Err(FederationError::InvalidConfig(format!("CFL requires a star topology, got {t}")))
            }
            (p, TopologyKind::Star) => {
                return Err(FederationError::InvalidConfig(format!("{p} requires a fully or ring topology, got star")))
            }
            _ => {}
        }
        self.model.validate()?;
        self.train.validate()?;
        build_topology(self.topology, self.participants, self.hub)
    }

    /// Participants that hold data and train, ascending.
    pub fn trainers(&self) -> Vec<usize> {
        let hub = self.hub.unwrap_or(0);
        (0..self.participants)
            .filter(|&i| self.paradigm != Paradigm::Cfl || i != hub)
            .collect()
    }
}

/// Windowed splits held by one training participant.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalData {
    pub train: WindowedDataset,
    pub validation: WindowedDataset,
    pub test: WindowedDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantEval {
    pub participant: usize,
    #[serde(flatten)]
    pub eval: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregator: Option<usize>,
    pub payloads: usize,
    pub bytes: u64,
    /// Mean loss of the last local epoch, per trainer.
    pub train_loss: Vec<f64>,
    pub validation: Vec<ParticipantEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationResult {
    pub trainers: Vec<usize>,
    pub samples: Vec<u64>,
    /// Validation scores of the shared initial model.
    pub initial: Vec<ParticipantEval>,
    pub rounds: Vec<RoundRecord>,
    pub test: Vec<ParticipantEval>,
    pub ledger: TransportLedger,
}

struct Node {
    params: ModelParameters,
    adam: AdamState,
    data: Option<LocalData>,
    samples: u64,
    last_loss: f64,
}

struct Message {
    origin: usize,
    samples: u64,
    payload: Vec<u8>,
}

/// Mutable state of a running federation.
pub struct FederationState {
    cfg: FederationConfig,
    topology: Topology,
    nodes: Vec<Node>,
    inbox: Vec<Vec<Message>>,
    ledger: TransportLedger,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Shuffle seed for local training in `round`. Shared by all participants,
/// so participants with identical data train identically.
pub fn training_seed(seed: u64, round: usize) -> u64 {
    mix(seed ^ mix(round as u64))
}

fn evaluate(params: &ModelParameters, data: &WindowedDataset) -> Result<Evaluation, FederationError> {
    let (preds, loss) = model::predict(params, data)?;
    let cm = confusion(&preds, data.labels(), params.config().num_classes)?;
    Ok(Evaluation::from_confusion(cm, loss)?)
}

impl FederationState {
    /// `data[k]` belongs to the k-th entry of [`FederationConfig::trainers`].
    pub fn new(cfg: &FederationConfig, data: Vec<LocalData>) -> Result<Self, FederationError> {
        let topology = cfg.validate()?;
        let trainers = cfg.trainers();
        if data.len() != trainers.len() {
            return Err(FederationError::InvalidConfig(format!(
                "{} trainers but {} local datasets",
                trainers.len(),
                data.len()
            )));
        }
        let init = ModelParameters::init(cfg.model, cfg.seed)?;
        let mut nodes: Vec<Node> = (0..cfg.participants)
            .map(|_| Node {
                params: init.clone(),
                adam: AdamState::for_params(&init),
                data: None,
                samples: 0,
                last_loss: f64::NAN,
            })
            .collect();
        for (&id, d) in trainers.iter().zip(data) {
            for (split, w) in [("train", &d.train), ("validation", &d.validation), ("test", &d.test)] {
                if w.is_empty() {
                    return Err(FederationError::InvalidConfig(format!("participant {id} has an empty {split} split")));
                }
                if w.ts() != cfg.model.ts || w.n_features() != cfg.model.input_dim {
                    return Err(FederationError::InvalidConfig(format!(
                        "participant {id} {split} windows are (ts={}, n={}), model expects (ts={}, n={})",
                        w.ts(),
                        w.n_features(),
                        cfg.model.ts,
                        cfg.model.input_dim
                    )));
                }
            }
            nodes[id].samples = d.train.len() as u64;
            nodes[id].data = Some(d);
        }
        Ok(Self {
            cfg: cfg.clone(),
            inbox: (0..cfg.participants).map(|_| Vec::new()).collect(),
            ledger: TransportLedger::new(cfg.participants),
            topology,
            nodes,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn ledger(&self) -> &TransportLedger {
        &self.ledger
    }

    pub fn params(&self, id: usize) -> &ModelParameters {
        &self.nodes[id].params
    }

    fn send(&mut self, round: usize, from: usize, to: usize, msg: Message) -> Result<(), FederationError> {
        if !self.topology.is_edge(from, to) {
            return Err(FederationError::Transport(format!("no link {from} -> {to}")));
        }
        self.ledger.record(round, from, to, msg.origin, &msg.payload);
        self.inbox[to].push(msg);
        Ok(())
    }

    /// Forwards a payload hop by hop along `path`; intermediate nodes pass
    /// it on unchanged.
    fn relay(&mut self, round: usize, path: &[usize], origin: usize, samples: u64, payload: &[u8]) -> Result<(), FederationError> {
        for hop in path.windows(2) {
            self.send(round, hop[0], hop[1], Message { origin, samples, payload: payload.to_vec() })?;
            if hop[1] != *path.last().expect("non-empty path") {
                self.inbox[hop[1]].pop();
            }
        }
        Ok(())
    }

    fn take_inbox(&mut self, id: usize, expected: usize) -> Result<Vec<Message>, FederationError> {
        let msgs = std::mem::take(&mut self.inbox[id]);
        if msgs.len() != expected {
            return Err(FederationError::Transport(format!(
                "participant {id} expected {expected} payloads, got {}",
                msgs.len()
            )));
        }
        Ok(msgs)
    }

    fn train_all(&mut self, round: usize) -> Result<(), FederationError> {
        let base = self.cfg.train;
        let seed = self.cfg.seed;
        for (id, node) in self.nodes.iter_mut().enumerate() {
            let Some(data) = &node.data else { continue };
            let tc = TrainConfig { seed: training_seed(seed, round), ..base };
            let log = model::train_local(&mut node.params, &mut node.adam, &data.train, &tc)
                .map_err(|source| FederationError::Participant { participant: id, source })?;
            node.last_loss = log.epoch_losses.last().copied().unwrap_or(f64::NAN);
        }
        Ok(())
    }

    fn aggregate_with_own(&self, id: usize, msgs: &[Message]) -> Result<ModelParameters, FederationError> {
        let received = msgs
            .iter()
            .map(|m| Ok((m.origin, m.samples, model::deserialize(&m.payload, &self.cfg.model)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let mut inputs: Vec<AggregationInput<'_>> = received
            .iter()
            .map(|(o, s, p)| AggregationInput { participant: *o, params: p, samples: *s })
            .collect();
        if self.nodes[id].data.is_some() {
            inputs.push(AggregationInput { participant: id, params: &self.nodes[id].params, samples: self.nodes[id].samples });
        }
        fedavg(&inputs)
    }

    pub fn run_round_dfl(&mut self, round: usize) -> Result<(), FederationError> {
        self.train_all(round)?;
        let n = self.cfg.participants;
        let payloads: Vec<Vec<u8>> = self.nodes.iter().map(|nd| model::serialize(&nd.params)).collect();
        for i in 0..n {
            for j in self.topology.neighbors(i) {
                let msg = Message { origin: i, samples: self.nodes[i].samples, payload: payloads[i].clone() };
                self.send(round, i, j, msg)?;
            }
        }
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let msgs = self.take_inbox(i, self.topology.degree(i))?;
            next.push(self.aggregate_with_own(i, &msgs)?);
        }
        for (node, p) in self.nodes.iter_mut().zip(next) {
            node.params = p;
        }
        Ok(())
    }

    pub fn sdfl_aggregator(&self, round: usize) -> usize {
        round % self.cfg.participants
    }

    pub fn run_round_sdfl(&mut self, round: usize) -> Result<(), FederationError> {
        self.train_all(round)?;
        let agg = self.sdfl_aggregator(round);
        self.collect_and_broadcast(round, agg)
    }

    pub fn run_round_cfl(&mut self, round: usize) -> Result<(), FederationError> {
        self.train_all(round)?;
        let hub = self.topology.hub.expect("validated star");
        self.collect_and_broadcast(round, hub)
    }

    fn collect_and_broadcast(&mut self, round: usize, agg: usize) -> Result<(), FederationError> {
        let n = self.cfg.participants;
        let others: Vec<usize> = (0..n).filter(|&p| p != agg).collect();
        for &p in &others {
            let path = self.topology.shortest_path(p, agg).expect("connected topology");
            let payload = model::serialize(&self.nodes[p].params);
            self.relay(round, &path, p, self.nodes[p].samples, &payload)?;
        }
        let msgs = self.take_inbox(agg, others.len())?;
        let global = self.aggregate_with_own(agg, &msgs)?;
        let payload = model::serialize(&global);
        for &p in &others {
            let path = self.topology.shortest_path(agg, p).expect("connected topology");
            self.relay(round, &path, agg, 0, &payload)?;
        }
        for &p in &others {
            let msg = self.take_inbox(p, 1)?.pop().expect("one payload");
            self.nodes[p].params = model::deserialize(&msg.payload, &self.cfg.model)?;
        }
        self.nodes[agg].params = model::deserialize(&payload, &self.cfg.model)?;
        Ok(())
    }

    pub fn run_round(&mut self, round: usize) -> Result<(), FederationError> {
        match self.cfg.paradigm {
            Paradigm::Dfl => self.run_round_dfl(round),
            Paradigm::Sdfl => self.run_round_sdfl(round),
            Paradigm::Cfl => self.run_round_cfl(round),
        }
    }

    fn evaluate_all(&self, test: bool) -> Result<Vec<ParticipantEval>, FederationError> {
        let mut out = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let Some(d) = &node.data else { continue };
            let split = if test { &d.test } else { &d.validation };
            out.push(ParticipantEval { participant: id, eval: evaluate(&node.params, split)? });
        }
        Ok(out)
    }
}

/// Wall-clock seconds per phase; kept apart from results, which must be
/// reproducible bit for bit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub round_seconds: Vec<f64>,
    pub total_seconds: f64,
}

/// Runs all rounds. `on_round` sees each round record as it completes.
pub fn run_federation(
    cfg: &FederationConfig,
    data: Vec<LocalData>,
    mut on_round: impl FnMut(&RoundRecord),
) -> Result<(FederationResult, Timing), FederationError> {
    let start = Instant::now();
    let mut state = FederationState::new(cfg, data)?;
    let initial = state.evaluate_all(false)?;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    let mut timing = Timing::default();
    for r in 0..cfg.rounds {
        let t0 = Instant::now();
        let before = state.ledger.entries.len();
        state.run_round(r)?;
        let new = &state.ledger.entries[before..];
        let record = RoundRecord {
            round: r,
            aggregator: match cfg.paradigm {
                Paradigm::Dfl => None,
                Paradigm::Sdfl => Some(state.sdfl_aggregator(r)),
                Paradigm::Cfl => state.topology.hub,
            },
            payloads: new.len(),
            bytes: new.iter().map(|e| e.bytes as u64).sum(),
            train_loss: state.nodes.iter().filter(|n| n.data.is_some()).map(|n| n.last_loss).collect(),
            validation: state.evaluate_all(false)?,
        };
        on_round(&record);
        rounds.push(record);
        timing.round_seconds.push(t0.elapsed().as_secs_f64());
    }
    let test = state.evaluate_all(true)?;
    timing.total_seconds = start.elapsed().as_secs_f64();
    let result = FederationResult {
        trainers: cfg.trainers(),
        samples: cfg.trainers().iter().map(|&i| state.nodes[i].samples).collect(),
        initial,
        rounds,
        test,
        ledger: state.ledger,
    };
    Ok((result, timing))
}
