//! Deterministic simulation of decentralized, semi-decentralized and
//! centralized federated learning for time-series anomaly classification.

pub mod config;
pub mod data;
pub mod experiment;
pub mod features;
pub mod federation;
pub mod metrics;
pub mod model;
pub mod stationary;
pub mod timeseries;
