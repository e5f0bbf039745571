use ndarray::{Array2, ArrayView2};

use super::splits::SplitPlan;
use crate::attacks::BlackBox;
use crate::data::Dataset;
use crate::error::Result;
use crate::federation::{run_strategy, EnsembleView, RoundConfig, Strategy, TrainedEnsemble};
use crate::nn::Architecture;

/// Opaque trained model bound to its split. The only capability it exposes is
/// prediction; weights never leave it.
#[derive(Debug)]
pub struct ModelHandle {
    split_index: usize,
    ensemble: TrainedEnsemble,
}

impl ModelHandle {
    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn strategy(&self) -> Strategy {
        self.ensemble.strategy
    }

    /// Bytes the training run put on the wire.
    pub fn comm_bytes(&self) -> u64 {
        self.ensemble.ledger.total()
    }

    /// Number of per-client models answering queries (1 for `global`).
    pub fn client_views(&self) -> usize {
        self.ensemble.client_models.len()
    }

    /// Whether an aggregated server model can be queried as well.
    pub fn has_server_view(&self) -> bool {
        self.ensemble.server_model.is_some()
    }

    pub fn predict(&self, view: EnsembleView, samples: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.ensemble.predict(view, samples)
    }

    /// Black-box access to one view of the model.
    pub fn view(&self, view: EnsembleView) -> HandleView<'_> {
        HandleView { handle: self, view }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HandleView<'a> {
    handle: &'a ModelHandle,
    view: EnsembleView,
}

impl BlackBox for HandleView<'_> {
    fn predict_proba(&self, samples: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.handle.predict(self.view, samples)
    }
}

/// Trains the model for `plan` on its member shards.
pub fn o_train(
    plan: &SplitPlan,
    cfg: &RoundConfig,
    arch: &Architecture,
    data: &Dataset,
    seed: u64,
) -> Result<ModelHandle> {
    let ensemble = run_strategy(cfg, arch, data, &plan.client_shards, seed)?;
    Ok(ModelHandle { split_index: plan.split_index, ensemble })
}

/// Class probabilities from every client view of the handle, in client order.
pub fn o_predict(handle: &ModelHandle, samples: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
    (0..handle.client_views()).map(|k| handle.predict(EnsembleView::Client(k), samples)).collect()
}
