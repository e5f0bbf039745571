use rand::seq::SliceRandom;

use super::config::{Objective, RoundConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{loss_and_grad, proximal_grad, FeatureTable, ModelParams};
use crate::seed::{derive_seed, rng_from, stream};

/// A participant: its shard of the member set and its current model.
#[derive(Clone, Debug)]
pub struct ClientState {
    pub client_id: usize,
    /// Row indices into the base dataset.
    pub shard: Vec<usize>,
    pub params: ModelParams,
    pub feature_table: Option<FeatureTable>,
}

impl ClientState {
    pub fn new(client_id: usize, shard: Vec<usize>, params: ModelParams) -> Self {
        Self { client_id, shard, params, feature_table: None }
    }
}

/// Seed of the shuffling stream used by `client` in `round` of a run seeded with `run_seed`.
pub fn shuffle_seed(run_seed: u64, round: usize, client_id: usize) -> u64 {
    derive_seed(run_seed, &[stream::SHUFFLE, round as u64, client_id as u64])
}

/// Runs `cfg.local_epochs` epochs of mini-batch SGD on the client's shard, starting from `anchor`.
///
/// The shard is reshuffled every epoch from a stream keyed by `(run_seed, round, client_id)`.
/// With [`Objective::Proximal`] each step also pulls towards `anchor` with strength `cfg.mu`.
pub fn local_update(
    client: &ClientState,
    anchor: &ModelParams,
    cfg: &RoundConfig,
    objective: Objective,
    data: &Dataset,
    round: usize,
    run_seed: u64,
) -> Result<ModelParams> {
    if client.shard.is_empty() {
        return Err(Error::Empty("client shard"));
    }
    let mut rng = rng_from(shuffle_seed(run_seed, round, client.client_id));
    let mut order = client.shard.clone();
    let mut params = anchor.clone();
    for _ in 0..cfg.local_epochs {
        order.shuffle(&mut rng);
        for batch_ids in order.chunks(cfg.batch_size) {
            let batch = data.select_features(batch_ids);
            let labels = data.select_labels(batch_ids);
            let (_, mut grads) = loss_and_grad(&params, batch.view(), &labels)?;
            if objective == Objective::Proximal {
                grads = proximal_grad(&grads, &params, anchor, cfg.mu)?;
            }
            params.apply_sgd(&grads, cfg.lr)?;
        }
    }
    Ok(params)
}
