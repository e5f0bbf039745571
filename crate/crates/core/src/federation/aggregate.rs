use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::{finish_table, FeatureTable, ModelParams};

/// Unweighted coordinate-wise mean, summed in list order.
pub fn aggregate_weights(params_list: &[ModelParams]) -> Result<ModelParams> {
    let (first, rest) = params_list.split_first().ok_or(Error::Empty("model list"))?;
    let arch = first.architecture();
    let mut sum = first.to_flat();
    for params in rest {
        if params.architecture() != arch {
            return Err(Error::ShapeMismatch);
        }
        for (acc, v) in sum.iter_mut().zip(params.to_flat()) {
            *acc += v;
        }
    }
    let n = params_list.len() as f64;
    sum.iter_mut().for_each(|v| *v /= n);
    ModelParams::from_flat(arch, &sum)
}

/// Count-weighted mean of client prototypes per class, renormalized; counts are summed.
pub fn aggregate_prototypes(tables: &[FeatureTable]) -> Result<FeatureTable> {
    let first = tables.first().ok_or(Error::Empty("feature table list"))?;
    let dim = first.prototypes.dim();
    let mut sums = Array2::zeros(dim);
    let mut counts = vec![0usize; dim.0];
    for table in tables {
        if table.prototypes.dim() != dim || table.counts.len() != dim.0 {
            return Err(Error::ShapeMismatch);
        }
        for (class, &count) in table.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            sums.row_mut(class).scaled_add(count as f64, &table.prototypes.row(class));
            counts[class] += count;
        }
    }
    Ok(finish_table(sums, counts))
}
