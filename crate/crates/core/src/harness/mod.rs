//! Cross-validated membership audit.
//!
//! The base dataset is split into members and nonmembers many times; one
//! model is trained per split behind an opaque [`ModelHandle`], attacked
//! through prediction queries only, and the remaining models serve as LiRA
//! shadows.

mod cv;
mod handle;
mod splits;

pub use cv::{
    cross_validate, model_seed, split_seed, CvConfig, PooledCurve, Report, ResultsRow, AGGREGATE_SPLIT, SERVER_SUFFIX,
};
pub use handle::{o_predict, o_train, HandleView, ModelHandle};
pub use splits::{make_splits, member_count, SplitPlan};
