//! Synthetic Gaussian-cluster classification data.

use ndarray::{Array1, Array2, ArrayView2};
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from, stream};

/// Norm of every class center.
pub const CENTER_RADIUS: f64 = 1.0;

/// Generator parameters, kept with the dataset as metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    /// Standard deviation of the isotropic noise around each center.
    pub cluster_spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub spec: Option<SyntheticSpec>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch { expected: features.nrows(), actual: labels.len() });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(Self { features, labels, num_classes, spec: None })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn select_features(&self, ids: &[usize]) -> Array2<f64> {
        self.features.select(ndarray::Axis(0), ids)
    }

    pub fn select_labels(&self, ids: &[usize]) -> Vec<usize> {
        ids.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Class centers uniform on the sphere of radius [`CENTER_RADIUS`]; samples are
/// center plus `N(0, spread^2 I)` noise. Rows are laid out class by class.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    if spec.num_classes < 2 || spec.input_dim == 0 || spec.samples_per_class == 0 {
        return Err(Error::InvalidConfig(
            "synthetic data needs >= 2 classes, input_dim >= 1 and samples_per_class >= 1".into(),
        ));
    }
    if !(spec.cluster_spread.is_finite() && spec.cluster_spread >= 0.0) {
        return Err(Error::InvalidConfig("cluster_spread must be finite and non-negative".into()));
    }
    let mut rng = rng_from(derive_seed(seed, &[stream::DATA]));
    let noise = Normal::new(0.0, spec.cluster_spread).expect("spread validated above");

    let centers: Vec<Array1<f64>> = (0..spec.num_classes)
        .map(|_| loop {
            let v: Array1<f64> = (0..spec.input_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.dot(&v).sqrt();
            if norm > 1e-12 {
                break v * (CENTER_RADIUS / norm);
            }
        })
        .collect();

    let rows = spec.num_classes * spec.samples_per_class;
    let mut features = Array2::zeros((rows, spec.input_dim));
    let mut labels = Vec::with_capacity(rows);
    for (class, center) in centers.iter().enumerate() {
        for i in 0..spec.samples_per_class {
            let mut row = features.row_mut(class * spec.samples_per_class + i);
            for (dst, &c) in row.iter_mut().zip(center) {
                *dst = c + noise.sample(&mut rng);
            }
            labels.push(class);
        }
    }
    Ok(Dataset { features, labels, num_classes: spec.num_classes, spec: Some(spec.clone()) })
}
