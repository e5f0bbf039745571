//! Round-based orchestration of the eight training strategies.
//!
//! Weight-sharing strategies follow the classic loop: broadcast the global
//! model, train `E` local epochs per client, average uniformly. Feature
//! strategies exchange [`FeatureTable`](crate::nn::FeatureTable)s instead of
//! (or in addition to) weights and classify by prototype retrieval. Every
//! transmission is recorded in a [`CommLedger`].

mod aggregate;
mod client;
mod config;
mod ledger;
mod run;

pub use aggregate::{aggregate_prototypes, aggregate_weights};
pub use client::{local_update, shuffle_seed, ClientState};
pub use config::{Objective, RoundConfig, Strategy, DEFAULT_BATCH_SIZE, DEFAULT_LR, DEFAULT_MU, DEFAULT_TAU};
pub use ledger::{ledger_bytes, CommLedger, Direction, LedgerEntry, LedgerInputs, PayloadKind};
pub use run::{run_strategy, EnsembleView, TrainedEnsemble};
