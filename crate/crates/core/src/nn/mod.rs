//! Framework-free dense classifier with an embedding head.
//!
//! The network is `input -> hidden (ReLU)* -> embedding (linear) -> logits`.
//! Weight-sharing strategies exchange [`ModelParams`]; feature-sharing
//! strategies exchange [`FeatureTable`]s built from normalized embeddings and
//! classify by cosine retrieval against them.

mod features;
mod model;

pub(crate) use features::finish_table;
pub use features::{
    class_prototypes, extract_features, normalize_rows, retrieval_predict, wire_table_bytes, FeatureTable,
    NormalizedEmbeddings,
};
pub use model::{
    forward, init_network, loss_and_grad, proximal_grad, sgd_step, softmax, softmax_rows, Architecture, Dense,
    ForwardOutput, Gradients, ModelParams, WIRE_BYTES_PER_SCALAR,
};

/// Index of the largest entry (first one on ties).
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (idx, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (idx, v);
        }
    }
    best.0
}
