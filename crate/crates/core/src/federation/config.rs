use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight training/communication strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Centralized training on the pooled member data.
    Global,
    /// Each client trains alone; nothing is exchanged.
    Local,
    FedAvg,
    FedProx,
    /// Clients exchange class prototypes only.
    FedFt,
    FedProxFt,
    /// FedAvg weights plus every per-sample embedding.
    FedFft,
    /// FedAvg weights plus class-mean embeddings.
    FedMft,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Global,
        Strategy::Local,
        Strategy::FedAvg,
        Strategy::FedProx,
        Strategy::FedFt,
        Strategy::FedProxFt,
        Strategy::FedFft,
        Strategy::FedMft,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Global => "global",
            Strategy::Local => "local",
            Strategy::FedAvg => "fedavg",
            Strategy::FedProx => "fedprox",
            Strategy::FedFt => "fedft",
            Strategy::FedProxFt => "fedproxft",
            Strategy::FedFft => "fedfft",
            Strategy::FedMft => "fedmft",
        }
    }

    /// Strategies whose local objective carries the proximal term.
    pub fn is_proximal(self) -> bool {
        matches!(self, Strategy::FedProx | Strategy::FedProxFt)
    }

    /// Strategies that average weights on the server each round.
    pub fn shares_weights(self) -> bool {
        matches!(self, Strategy::FedAvg | Strategy::FedProx | Strategy::FedFft | Strategy::FedMft)
    }

    /// Strategies that predict by retrieval against a global feature table.
    pub fn shares_features(self) -> bool {
        matches!(self, Strategy::FedFt | Strategy::FedProxFt | Strategy::FedFft | Strategy::FedMft)
    }

    pub fn objective(self) -> Objective {
        if self.is_proximal() {
            Objective::Proximal
        } else {
            Objective::Plain
        }
    }

    pub fn valid_names() -> String {
        Strategy::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == wanted)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy '{s}'; valid: {}", Strategy::valid_names())))
    }
}

/// Local training objective: mean cross-entropy, optionally plus the proximal penalty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Plain,
    Proximal,
}

pub const DEFAULT_LR: f64 = 0.05;
pub const DEFAULT_MU: f64 = 0.01;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub num_clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub lr: f64,
    /// Proximal coefficient; only meaningful (and only allowed non-zero) for proximal strategies.
    pub mu: f64,
    pub batch_size: usize,
    pub strategy: Strategy,
    /// Retrieval softmax temperature for feature strategies.
    pub tau: f64,
}

impl RoundConfig {
    /// Defaults for `strategy`, with `mu` set to [`DEFAULT_MU`] only for proximal strategies.
    pub fn new(strategy: Strategy, num_clients: usize, rounds: usize, local_epochs: usize) -> Self {
        Self {
            num_clients,
            rounds,
            local_epochs,
            lr: DEFAULT_LR,
            mu: if strategy.is_proximal() { DEFAULT_MU } else { 0.0 },
            batch_size: DEFAULT_BATCH_SIZE,
            strategy,
            tau: DEFAULT_TAU,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_clients", self.num_clients),
            ("rounds", self.rounds),
            ("local_epochs", self.local_epochs),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig("lr must be finite and positive".into()));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidConfig("mu must be finite and non-negative".into()));
        }
        if self.mu != 0.0 && !self.strategy.is_proximal() {
            return Err(Error::InvalidConfig(format!("mu must be 0 for {}", self.strategy)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidConfig("tau must be positive".into()));
        }
        Ok(())
    }
}
