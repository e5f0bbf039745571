//! Federated learning simulator with black-box membership inference auditing.
//!
//! The crate trains small dense classifiers under eight communication
//! strategies ([`federation::Strategy`]), keeps a byte-exact ledger of what
//! each strategy puts on the wire, and measures privacy leakage with entropy,
//! modified-entropy and likelihood-ratio (LiRA) membership attacks evaluated
//! through a cross-validation harness of shadow models.

pub mod attacks;
pub mod config;
pub mod data;
pub mod error;
pub mod federation;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod seed;

pub use error::{Error, Result};
