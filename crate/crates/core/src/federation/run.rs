use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::aggregate::{aggregate_prototypes, aggregate_weights};
use super::client::{local_update, ClientState};
use super::config::{Objective, RoundConfig, Strategy};
use super::ledger::{CommLedger, Direction, PayloadKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{
    class_prototypes, extract_features, forward, init_network, retrieval_predict, softmax_rows, Architecture,
    FeatureTable, ModelParams, WIRE_BYTES_PER_SCALAR,
};
use crate::seed::{derive_seed, stream};

/// Which model of an ensemble answers a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleView {
    /// The model held by client `k` (the single model for `global`).
    Client(usize),
    /// The server's aggregated model, for weight-sharing strategies.
    Server,
}

/// Everything a strategy run produces.
///
/// Which fields are populated depends on the strategy:
/// `global` has one client model; weight-sharing strategies also carry the
/// aggregated `server_model`; feature strategies carry `global_table`.
#[derive(Clone, Debug)]
pub struct TrainedEnsemble {
    pub strategy: Strategy,
    pub client_models: Vec<ModelParams>,
    pub server_model: Option<ModelParams>,
    pub global_table: Option<FeatureTable>,
    pub ledger: CommLedger,
    pub tau: f64,
}

impl TrainedEnsemble {
    fn model(&self, view: EnsembleView) -> Result<&ModelParams> {
        match view {
            EnsembleView::Client(k) => {
                self.client_models.get(k).ok_or(Error::InvalidView { view: k, available: self.client_models.len() })
            }
            EnsembleView::Server => self
                .server_model
                .as_ref()
                .ok_or(Error::InvalidView { view: usize::MAX, available: self.client_models.len() }),
        }
    }

    /// Class probabilities: softmax of logits, or retrieval against the global
    /// feature table when the strategy shares features.
    pub fn predict(&self, view: EnsembleView, samples: ArrayView2<f64>) -> Result<Array2<f64>> {
        let model = self.model(view)?;
        match &self.global_table {
            Some(table) => {
                let feats = extract_features(model, samples)?;
                retrieval_predict(feats.rows.view(), table, self.tau)
            }
            None => Ok(softmax_rows(&forward(model, samples)?.logits)),
        }
    }
}

fn run_clients<F>(clients: &[ClientState], update: F) -> Result<Vec<ModelParams>>
where
    F: Fn(&ClientState) -> Result<ModelParams> + Sync + Send,
{
    // collect() on an indexed parallel iterator keeps client order.
    clients.par_iter().map(update).collect()
}

fn client_table(params: &ModelParams, shard: &[usize], data: &Dataset) -> Result<FeatureTable> {
    let feats = extract_features(params, data.select_features(shard).view())?;
    class_prototypes(feats.rows.view(), &data.select_labels(shard), data.num_classes)
}

/// Trains one ensemble for `cfg.strategy` on the member data described by `shards`.
///
/// `shards[k]` holds the dataset rows owned by client `k`. All clients start
/// from the same initial weights; every random stream is derived from `seed`.
pub fn run_strategy(
    cfg: &RoundConfig,
    arch: &Architecture,
    data: &Dataset,
    shards: &[Vec<usize>],
    seed: u64,
) -> Result<TrainedEnsemble> {
    cfg.validate()?;
    if shards.len() != cfg.num_clients {
        return Err(Error::InvalidConfig(format!("expected {} client shards, got {}", cfg.num_clients, shards.len())));
    }
    if shards.iter().any(Vec::is_empty) {
        return Err(Error::Empty("client shard"));
    }
    if arch.input_dim != data.input_dim() || arch.num_classes != data.num_classes {
        return Err(Error::InvalidConfig("architecture does not match the dataset".into()));
    }
    let init = init_network(arch, derive_seed(seed, &[stream::INIT]))?;
    let mut ledger = CommLedger::default();
    let objective = cfg.strategy.objective();

    let trained = match cfg.strategy {
        Strategy::Global => {
            let sample_bytes = WIRE_BYTES_PER_SCALAR * data.input_dim() as u64;
            for (k, shard) in shards.iter().enumerate() {
                ledger.record(0, k, Direction::Uplink, PayloadKind::RawData, shard.len() as u64 * sample_bytes);
            }
            let pooled: Vec<usize> = shards.concat();
            let mut client = ClientState::new(0, pooled, init);
            for round in 0..cfg.rounds {
                client.params = local_update(&client, &client.params, cfg, Objective::Plain, data, round, seed)?;
            }
            TrainedEnsemble {
                strategy: cfg.strategy,
                client_models: vec![client.params],
                server_model: None,
                global_table: None,
                ledger,
                tau: cfg.tau,
            }
        }
        Strategy::Local | Strategy::FedFt | Strategy::FedProxFt => {
            let mut clients: Vec<ClientState> =
                shards.iter().enumerate().map(|(k, s)| ClientState::new(k, s.clone(), init.clone())).collect();
            let mut global_table = None;
            for round in 0..cfg.rounds {
                let updated = run_clients(&clients, |c| local_update(c, &c.params, cfg, objective, data, round, seed))?;
                for (client, params) in clients.iter_mut().zip(updated) {
                    client.params = params;
                }
                if cfg.strategy == Strategy::Local {
                    continue;
                }
                let tables: Vec<FeatureTable> =
                    clients.par_iter().map(|c| client_table(&c.params, &c.shard, data)).collect::<Result<_>>()?;
                for (k, table) in tables.iter().enumerate() {
                    ledger.record(round, k, Direction::Uplink, PayloadKind::FeatureTable, table.serialized_bytes());
                }
                let table = aggregate_prototypes(&tables)?;
                for (k, client) in clients.iter_mut().enumerate() {
                    ledger.record(round, k, Direction::Downlink, PayloadKind::FeatureTable, table.serialized_bytes());
                    client.feature_table = Some(table.clone());
                }
                global_table = Some(table);
            }
            TrainedEnsemble {
                strategy: cfg.strategy,
                client_models: clients.into_iter().map(|c| c.params).collect(),
                server_model: None,
                global_table,
                ledger,
                tau: cfg.tau,
            }
        }
        Strategy::FedAvg | Strategy::FedProx | Strategy::FedFft | Strategy::FedMft => {
            let mut global = init;
            let mut clients: Vec<ClientState> =
                shards.iter().enumerate().map(|(k, s)| ClientState::new(k, s.clone(), global.clone())).collect();
            let mut global_table = None;
            let model_bytes = global.serialized_bytes();
            for round in 0..cfg.rounds {
                for k in 0..clients.len() {
                    ledger.record(round, k, Direction::Downlink, PayloadKind::Model, model_bytes);
                }
                let updated = run_clients(&clients, |c| local_update(c, &global, cfg, objective, data, round, seed))?;
                for (k, (client, params)) in clients.iter_mut().zip(updated).enumerate() {
                    ledger.record(round, k, Direction::Uplink, PayloadKind::Model, model_bytes);
                    client.params = params;
                }

                let table = match cfg.strategy {
                    Strategy::FedFft => Some(sample_feature_table(&clients, data, round, &mut ledger)?),
                    Strategy::FedMft => {
                        let tables: Vec<FeatureTable> = clients
                            .par_iter()
                            .map(|c| client_table(&c.params, &c.shard, data))
                            .collect::<Result<_>>()?;
                        for (k, t) in tables.iter().enumerate() {
                            ledger.record(round, k, Direction::Uplink, PayloadKind::FeatureTable, t.serialized_bytes());
                        }
                        Some(aggregate_prototypes(&tables)?)
                    }
                    _ => None,
                };
                if let Some(table) = table {
                    for (k, client) in clients.iter_mut().enumerate() {
                        ledger.record(
                            round,
                            k,
                            Direction::Downlink,
                            PayloadKind::FeatureTable,
                            table.serialized_bytes(),
                        );
                        client.feature_table = Some(table.clone());
                    }
                    global_table = Some(table);
                }

                let local_models: Vec<ModelParams> = clients.iter().map(|c| c.params.clone()).collect();
                global = aggregate_weights(&local_models)?;
            }
            TrainedEnsemble {
                strategy: cfg.strategy,
                client_models: clients.into_iter().map(|c| c.params).collect(),
                server_model: Some(global),
                global_table,
                ledger,
                tau: cfg.tau,
            }
        }
    };
    Ok(trained)
}

/// FedFFT upload: every client sends the normalized embedding of each shard sample;
/// the server builds class prototypes from the pooled features.
fn sample_feature_table(
    clients: &[ClientState],
    data: &Dataset,
    round: usize,
    ledger: &mut CommLedger,
) -> Result<FeatureTable> {
    let per_client: Vec<Array2<f64>> = clients
        .par_iter()
        .map(|c| extract_features(&c.params, data.select_features(&c.shard).view()).map(|f| f.rows))
        .collect::<Result<_>>()?;
    let embed_dim = per_client[0].ncols();
    let mut labels = Vec::new();
    for (k, (client, feats)) in clients.iter().zip(&per_client).enumerate() {
        let bytes = WIRE_BYTES_PER_SCALAR * (feats.nrows() * embed_dim) as u64;
        ledger.record(round, k, Direction::Uplink, PayloadKind::SampleFeatures, bytes);
        labels.extend(data.select_labels(&client.shard));
    }
    let views: Vec<_> = per_client.iter().map(|f| f.view()).collect();
    let pooled = ndarray::concatenate(ndarray::Axis(0), &views).expect("equal embedding widths");
    class_prototypes(pooled.view(), &labels, data.num_classes)
}
