//! Shared fixtures for the criterion benchmarks.

use fedmia_core::data::{gen_synthetic, Dataset, SyntheticSpec};
use fedmia_core::nn::{init_network, Architecture, ModelParams};
use ndarray::Array2;

pub fn default_arch(input_dim: usize, num_classes: usize) -> Architecture {
    Architecture::new(input_dim, vec![64], 128, num_classes)
}

pub fn dataset(num_classes: usize, input_dim: usize, per_class: usize) -> Dataset {
    gen_synthetic(&SyntheticSpec { num_classes, input_dim, samples_per_class: per_class, cluster_spread: 0.6 }, 7)
        .expect("valid synthetic spec")
}

pub fn model(arch: &Architecture) -> ModelParams {
    init_network(arch, 3).expect("valid architecture")
}

pub fn batch(data: &Dataset, rows: usize) -> (Array2<f64>, Vec<usize>) {
    let ids: Vec<usize> = (0..rows.min(data.len())).collect();
    (data.select_features(&ids), data.select_labels(&ids))
}
