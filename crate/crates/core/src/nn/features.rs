use super::model::{forward, softmax, ModelParams, WIRE_BYTES_PER_SCALAR};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2};

/// Unit-normalized embeddings plus the number of rows that had zero norm.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedEmbeddings {
    pub rows: Array2<f64>,
    /// Rows whose raw embedding was exactly zero; they are left as zero rows.
    pub zero_rows: usize,
}

/// L2-normalizes each row in place and returns how many rows were all-zero.
pub fn normalize_rows(rows: &mut Array2<f64>) -> usize {
    let mut zero_rows = 0;
    for mut row in rows.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        } else {
            zero_rows += 1;
        }
    }
    zero_rows
}

pub fn extract_features(params: &ModelParams, batch: ArrayView2<f64>) -> Result<NormalizedEmbeddings> {
    let mut rows = forward(params, batch)?.embeddings;
    let zero_rows = normalize_rows(&mut rows);
    Ok(NormalizedEmbeddings { rows, zero_rows })
}

/// Per-class prototype embeddings, the payload of feature-sharing strategies.
///
/// Rows with a positive count have unit norm; rows with count zero are all zero
/// and never take part in retrieval.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub prototypes: Array2<f64>,
    pub counts: Vec<usize>,
}

impl FeatureTable {
    pub fn num_classes(&self) -> usize {
        self.prototypes.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.prototypes.ncols()
    }

    /// Wire size: prototypes only, counts travel as metadata.
    pub fn serialized_bytes(&self) -> u64 {
        wire_table_bytes(self.num_classes(), self.embed_dim())
    }

    pub fn has_prototypes(&self) -> bool {
        self.counts.iter().any(|&c| c > 0)
    }
}

pub fn wire_table_bytes(num_classes: usize, embed_dim: usize) -> u64 {
    WIRE_BYTES_PER_SCALAR * (num_classes * embed_dim) as u64
}

/// Sums `weight * row` per class, then renormalizes each accumulated row.
/// A class whose accumulated vector vanishes ends up as a zero row with count 0.
pub(crate) fn finish_table(mut sums: Array2<f64>, mut counts: Vec<usize>) -> FeatureTable {
    for (mut row, count) in sums.rows_mut().into_iter().zip(counts.iter_mut()) {
        let norm = row.dot(&row).sqrt();
        if *count > 0 && norm > 0.0 {
            row /= norm;
        } else {
            row.fill(0.0);
            *count = 0;
        }
    }
    FeatureTable { prototypes: sums, counts }
}

/// Renormalized class means of unit embeddings. Zero rows are skipped and not counted.
pub fn class_prototypes(embeddings: ArrayView2<f64>, labels: &[usize], num_classes: usize) -> Result<FeatureTable> {
    if embeddings.nrows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: embeddings.nrows(), actual: labels.len() });
    }
    let mut sums = Array2::zeros((num_classes, embeddings.ncols()));
    let mut counts = vec![0usize; num_classes];
    for (row, &label) in embeddings.rows().into_iter().zip(labels) {
        if label >= num_classes {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut target = sums.row_mut(label);
        target.scaled_add(1.0 / norm, &row);
        counts[label] += 1;
    }
    Ok(finish_table(sums, counts))
}

/// Softmax over cosine similarities to the populated prototypes, at temperature `tau`.
pub fn retrieval_predict(embeddings: ArrayView2<f64>, table: &FeatureTable, tau: f64) -> Result<Array2<f64>> {
    if !table.has_prototypes() {
        return Err(Error::NoPrototypes);
    }
    if embeddings.ncols() != table.embed_dim() {
        return Err(Error::DimensionMismatch { expected: table.embed_dim(), actual: embeddings.ncols() });
    }
    let sims = embeddings.dot(&table.prototypes.t());
    let mut probs = Array2::zeros(sims.raw_dim());
    for (sim_row, mut out_row) in sims.rows().into_iter().zip(probs.rows_mut()) {
        let scaled: Vec<f64> =
            sim_row.iter().zip(&table.counts).map(|(&s, &c)| if c > 0 { s / tau } else { f64::NEG_INFINITY }).collect();
        out_row.assign(&Array1::from(softmax(&scaled)));
    }
    Ok(probs)
}
