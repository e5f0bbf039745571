//! Communication accounting.
//!
//! Every transmission is billed at 4 bytes per real scalar. Class counts and
//! labels that accompany feature payloads are metadata and are not billed.

use serde::{Deserialize, Serialize};

use super::config::Strategy;
use crate::nn::WIRE_BYTES_PER_SCALAR;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Client to server.
    Uplink,
    /// Server to client.
    Downlink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    RawData,
    Model,
    FeatureTable,
    SampleFeatures,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub round: usize,
    pub client: usize,
    pub direction: Direction,
    pub payload: PayloadKind,
    pub bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLedger {
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub entries: Vec<LedgerEntry>,
}

impl CommLedger {
    pub fn record(&mut self, round: usize, client: usize, direction: Direction, payload: PayloadKind, bytes: u64) {
        match direction {
            Direction::Uplink => self.uplink_bytes += bytes,
            Direction::Downlink => self.downlink_bytes += bytes,
        }
        self.entries.push(LedgerEntry { round, client, direction, payload, bytes });
    }

    pub fn total(&self) -> u64 {
        self.uplink_bytes + self.downlink_bytes
    }

    pub fn bytes_of(&self, payload: PayloadKind) -> u64 {
        self.entries.iter().filter(|e| e.payload == payload).map(|e| e.bytes).sum()
    }
}

/// Inputs to the closed-form byte count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerInputs {
    pub rounds: u64,
    /// Wire size of one model.
    pub model_bytes: u64,
    /// Wire size of one raw sample.
    pub sample_bytes: u64,
    pub num_classes: u64,
    pub embed_dim: u64,
    /// One entry per client.
    pub shard_sizes: Vec<u64>,
}

/// Closed-form total of what [`super::run_strategy`] bills for `strategy`.
pub fn ledger_bytes(strategy: Strategy, inputs: &LedgerInputs) -> u64 {
    let clients = inputs.shard_sizes.len() as u64;
    let samples: u64 = inputs.shard_sizes.iter().sum();
    let table = WIRE_BYTES_PER_SCALAR * inputs.num_classes * inputs.embed_dim;
    let weights_per_round = 2 * clients * inputs.model_bytes;
    let table_round_trip = 2 * clients * table;
    let per_round = match strategy {
        Strategy::Global => return samples * inputs.sample_bytes,
        Strategy::Local => 0,
        Strategy::FedAvg | Strategy::FedProx => weights_per_round,
        Strategy::FedFt | Strategy::FedProxFt => table_round_trip,
        Strategy::FedFft => weights_per_round + samples * WIRE_BYTES_PER_SCALAR * inputs.embed_dim + clients * table,
        Strategy::FedMft => weights_per_round + table_round_trip,
    };
    inputs.rounds * per_round
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(clients: usize, classes: u64) -> LedgerInputs {
        LedgerInputs {
            rounds: 10,
            model_bytes: 1000,
            sample_bytes: 64,
            num_classes: classes,
            embed_dim: 128,
            shard_sizes: vec![7; clients],
        }
    }

    #[test]
    fn feature_only_strategies_match_reported_totals() {
        assert_eq!(ledger_bytes(Strategy::FedFt, &inputs(10, 21)), 2_150_400);
        assert_eq!(ledger_bytes(Strategy::FedFt, &inputs(20, 30)), 6_144_000);
        assert_eq!(ledger_bytes(Strategy::FedProxFt, &inputs(10, 21)), 2_150_400);
        assert_eq!(ledger_bytes(Strategy::Local, &inputs(10, 21)), 0);
    }

    #[test]
    fn weight_sharing_closed_forms() {
        let i = inputs(4, 8);
        assert_eq!(ledger_bytes(Strategy::FedAvg, &i), 2 * 4 * 10 * 1000);
        assert_eq!(ledger_bytes(Strategy::FedProx, &i), ledger_bytes(Strategy::FedAvg, &i));
        assert_eq!(ledger_bytes(Strategy::Global, &i), 28 * 64);
        let table = 4 * 8 * 128;
        assert_eq!(ledger_bytes(Strategy::FedMft, &i), 10 * (2 * 4 * 1000 + 2 * 4 * table));
        assert_eq!(ledger_bytes(Strategy::FedFft, &i), 10 * (2 * 4 * 1000 + 28 * 4 * 128 + 4 * table));
    }

    #[test]
    fn ledger_totals_track_entries() {
        let mut ledger = CommLedger::default();
        ledger.record(0, 1, Direction::Uplink, PayloadKind::Model, 10);
        ledger.record(0, 1, Direction::Downlink, PayloadKind::FeatureTable, 5);
        assert_eq!(ledger.total(), 15);
        assert_eq!(ledger.total(), ledger.entries.iter().map(|e| e.bytes).sum::<u64>());
        assert_eq!(ledger.bytes_of(PayloadKind::Model), 10);
    }
}
