//! Experiment configuration: flat `key = value` files with `#` comments,
//! where every key can also be overridden from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use crate::attacks::AttackTag;
use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::federation::{RoundConfig, Strategy, DEFAULT_BATCH_SIZE, DEFAULT_LR, DEFAULT_MU, DEFAULT_TAU};
use crate::harness::CvConfig;
use crate::nn::Architecture;
use crate::report::OutputFormat;

/// Every accepted key, in documentation order. Dashes and underscores are interchangeable.
pub const KEYS: [&str; 22] = [
    "strategy",
    "clients",
    "rounds",
    "local_epochs",
    "mu",
    "lr",
    "batch_size",
    "tau",
    "splits",
    "member_fraction",
    "attacks",
    "target_fpr",
    "seed",
    "classes",
    "input_dim",
    "samples_per_class",
    "spread",
    "hidden",
    "embed_dim",
    "out",
    "format",
    "workers",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Strategies audited one after another.
    pub strategies: Vec<Strategy>,
    pub clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    /// Proximal weight for fedprox and fedproxft; other strategies always run with 0.
    pub mu: f64,
    pub lr: f64,
    pub batch_size: usize,
    /// Softmax temperature of prototype retrieval.
    pub tau: f64,
    pub splits: usize,
    pub member_fraction: f64,
    pub attacks: Vec<AttackTag>,
    pub target_fpr: f64,
    pub seed: u64,
    pub classes: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    pub spread: f64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    /// Standard output when unset.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::FedAvg],
            clients: 4,
            rounds: 10,
            local_epochs: 5,
            mu: DEFAULT_MU,
            lr: DEFAULT_LR,
            batch_size: DEFAULT_BATCH_SIZE,
            tau: DEFAULT_TAU,
            splits: 32,
            member_fraction: 0.5,
            attacks: AttackTag::ALL.to_vec(),
            target_fpr: 0.001,
            seed: 0,
            classes: 8,
            input_dim: 16,
            samples_per_class: 30,
            spread: 0.7,
            hidden: vec![64],
            embed_dim: 128,
            out: None,
            format: OutputFormat::Csv,
            workers: 0,
        }
    }
}

fn message(e: Error) -> String {
    match e {
        Error::InvalidConfig(m) => m,
        other => other.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("{what}: '{value}' is not a valid {}", std::any::type_name::<T>()))
}

fn parse_positive(value: &str, key: &str) -> std::result::Result<usize, String> {
    match parse_num::<usize>(value, key)? {
        0 => Err(format!("{key} must be positive")),
        v => Ok(v),
    }
}

fn parse_real(value: &str, key: &str) -> std::result::Result<f64, String> {
    let v: f64 = parse_num(value, key)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{key} must be finite"))
    }
}

fn parse_list<T>(
    value: &str,
    item: impl Fn(&str) -> std::result::Result<T, String>,
) -> std::result::Result<Vec<T>, String> {
    let items: Vec<T> =
        value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(item).collect::<std::result::Result<_, _>>()?;
    Ok(items)
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "strategy" => {
                let list = parse_list(value, |s| s.parse::<Strategy>().map_err(message))?;
                if list.is_empty() {
                    return Err("strategy list is empty".into());
                }
                self.strategies = list;
            }
            "clients" => self.clients = parse_positive(value, &key)?,
            "rounds" => self.rounds = parse_positive(value, &key)?,
            "local_epochs" => self.local_epochs = parse_positive(value, &key)?,
            "batch_size" => self.batch_size = parse_positive(value, &key)?,
            "mu" => {
                let v = parse_real(value, &key)?;
                if v < 0.0 {
                    return Err("mu must be non-negative".into());
                }
                self.mu = v;
            }
            "lr" => {
                let v = parse_real(value, &key)?;
                if v <= 0.0 {
                    return Err("lr must be positive".into());
                }
                self.lr = v;
            }
            "tau" => {
                let v = parse_real(value, &key)?;
                if v <= 0.0 {
                    return Err("tau must be positive".into());
                }
                self.tau = v;
            }
            "splits" => {
                let v = parse_positive(value, &key)?;
                if v < 2 {
                    return Err("splits must be at least 2".into());
                }
                self.splits = v;
            }
            "member_fraction" => {
                let v = parse_real(value, &key)?;
                if !(v > 0.0 && v < 1.0) {
                    return Err("member_fraction must lie in (0, 1)".into());
                }
                self.member_fraction = v;
            }
            "attacks" => {
                let list = parse_list(value, |s| s.parse::<AttackTag>().map_err(message))?;
                if list.is_empty() {
                    return Err("attack list is empty".into());
                }
                self.attacks = list;
            }
            "target_fpr" => {
                let v = parse_real(value, &key)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err("target_fpr must lie in [0, 1]".into());
                }
                self.target_fpr = v;
            }
            "seed" => self.seed = parse_num(value, "seed")?,
            "classes" => {
                let v = parse_positive(value, &key)?;
                if v < 2 {
                    return Err("classes must be at least 2".into());
                }
                self.classes = v;
            }
            "input_dim" => self.input_dim = parse_positive(value, &key)?,
            "samples_per_class" => self.samples_per_class = parse_positive(value, &key)?,
            "spread" => {
                let v = parse_real(value, &key)?;
                if v <= 0.0 {
                    return Err("spread must be positive".into());
                }
                self.spread = v;
            }
            "hidden" => self.hidden = parse_list(value, |s| parse_positive(s, "hidden"))?,
            "embed_dim" => self.embed_dim = parse_positive(value, &key)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "format" => self.format = value.parse().map_err(message)?,
            "workers" => self.workers = parse_num(value, "workers")?,
            _ => return Err(format!("unknown key '{key}'; valid: {}", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Applies the `key = value` lines of a config file.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(key, value).map_err(|message| Error::Parse { line: i + 1, message })?;
        }
        Ok(())
    }

    /// Applies flag overrides given as `(key, value)` pairs, after any file.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (key, value) in overrides {
            self.set(key, value).map_err(|m| Error::InvalidConfig(format!("--{}: {m}", key.replace('_', "-"))))?;
        }
        Ok(())
    }

    pub fn dataset_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            num_classes: self.classes,
            input_dim: self.input_dim,
            samples_per_class: self.samples_per_class,
            cluster_spread: self.spread,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::new(self.input_dim, self.hidden.clone(), self.embed_dim, self.classes)
    }

    /// Round settings for `strategy`; `mu` only reaches the proximal strategies.
    pub fn round_config(&self, strategy: Strategy) -> RoundConfig {
        let mut cfg = RoundConfig::new(strategy, self.clients, self.rounds, self.local_epochs);
        cfg.lr = self.lr;
        cfg.mu = if strategy.is_proximal() { self.mu } else { 0.0 };
        cfg.batch_size = self.batch_size;
        cfg.tau = self.tau;
        cfg
    }

    pub fn cv_config(&self, strategy: Strategy) -> CvConfig {
        CvConfig {
            round: self.round_config(strategy),
            arch: self.architecture(),
            num_splits: self.splits,
            member_fraction: self.member_fraction,
            attacks: self.attacks.clone(),
            target_fpr: self.target_fpr,
            seed: self.seed,
            workers: self.workers,
        }
    }

    /// Cross-field checks that no single key can enforce.
    pub fn validate(&self) -> Result<()> {
        if self.attacks.contains(&AttackTag::Lira) && self.splits < 3 {
            return Err(Error::InvalidConfig("lira needs at least 3 splits".into()));
        }
        let base = self.classes * self.samples_per_class;
        if base < 2 * self.clients {
            return Err(Error::InvalidConfig(format!(
                "{base} samples cannot be split across {} clients",
                self.clients
            )));
        }
        self.architecture().validate()?;
        for &s in &self.strategies {
            self.round_config(s).validate()?;
        }
        Ok(())
    }
}

/// Defaults, then the file at `path` if any, then `overrides`.
pub fn parse_config<'a>(
    path: Option<&Path>,
    overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = path {
        cfg.apply_str(&fs::read_to_string(path)?)?;
    }
    cfg.apply_overrides(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_str("\n# nothing here\n   \n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn file_then_flags() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_str("rounds = 3  # short\nstrategy = fedprox, local\nlocal-epochs=5\n").unwrap();
        assert_eq!(cfg.rounds, 3);
        assert_eq!(cfg.local_epochs, 5);
        assert_eq!(cfg.strategies, vec![Strategy::FedProx, Strategy::Local]);
        cfg.apply_overrides([("rounds", "10")]).unwrap();
        assert_eq!(cfg.rounds, 10);
    }

    #[test]
    fn line_numbered_errors() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_str("rounds = 2\n\nstrategy = fedavgg\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(msg.contains("fedavg") && msg.contains("fedmft"), "{msg}");

        assert!(matches!(cfg.apply_str("rounds = -1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(cfg.apply_str("rounds = 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(cfg.apply_str("colour = blue"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(cfg.apply_str("rounds 4"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn mu_only_reaches_proximal_strategies() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("mu", "0.5").unwrap();
        assert_eq!(cfg.round_config(Strategy::FedAvg).mu, 0.0);
        assert_eq!(cfg.round_config(Strategy::FedProx).mu, 0.5);
        assert_eq!(cfg.round_config(Strategy::FedProxFt).mu, 0.5);
    }

    #[test]
    fn every_key_settable() {
        let values = [
            "fedft", "3", "2", "1", "0.1", "0.2", "8", "0.05", "4", "0.4", "mentr", "0.01", "5", "3", "6", "7", "0.9",
            "8,8", "16", "x.csv", "json", "2",
        ];
        let mut cfg = ExperimentConfig::default();
        for (k, v) in KEYS.iter().zip(values) {
            cfg.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        assert_eq!(cfg.hidden, vec![8, 8]);
        assert_eq!(cfg.format, OutputFormat::Json);
        cfg.validate().unwrap();
    }
}
