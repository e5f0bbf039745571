use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fedmia_core::config::{parse_config, ExperimentConfig};
use fedmia_core::data::gen_synthetic;
use fedmia_core::federation::{ledger_bytes, LedgerInputs};
use fedmia_core::harness::{cross_validate, member_count, Report};
use fedmia_core::nn::WIRE_BYTES_PER_SCALAR;
use fedmia_core::report::{emit_results, write_rows};

/// Federated training under several communication strategies, audited with
/// membership inference attacks.
#[derive(Parser)]
#[command(name = "fedmia", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every split, attack it and write the result table.
    Run(Settings),
    /// Print the bytes each strategy would put on the wire, without training.
    Ledger(Settings),
}

#[derive(Args)]
struct Settings {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One strategy or a comma-separated list.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    clients: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    local_epochs: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    splits: Option<String>,
    #[arg(long)]
    member_fraction: Option<String>,
    /// Comma-separated subset of entropy, mentr, lira.
    #[arg(long)]
    attacks: Option<String>,
    #[arg(long)]
    target_fpr: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    input_dim: Option<String>,
    #[arg(long)]
    samples_per_class: Option<String>,
    #[arg(long)]
    spread: Option<String>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    embed_dim: Option<String>,
    /// Result file; standard output when omitted.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<String>,
}

impl Settings {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let flags = [
            ("strategy", &self.strategy),
            ("clients", &self.clients),
            ("rounds", &self.rounds),
            ("local_epochs", &self.local_epochs),
            ("mu", &self.mu),
            ("lr", &self.lr),
            ("batch_size", &self.batch_size),
            ("tau", &self.tau),
            ("splits", &self.splits),
            ("member_fraction", &self.member_fraction),
            ("attacks", &self.attacks),
            ("target_fpr", &self.target_fpr),
            ("seed", &self.seed),
            ("classes", &self.classes),
            ("input_dim", &self.input_dim),
            ("samples_per_class", &self.samples_per_class),
            ("spread", &self.spread),
            ("hidden", &self.hidden),
            ("embed_dim", &self.embed_dim),
            ("out", &self.out),
            ("format", &self.format),
            ("workers", &self.workers),
        ];
        flags.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        Ok(parse_config(self.config.as_deref(), self.overrides())?)
    }
}

fn run(cfg: &ExperimentConfig) -> Result<()> {
    let data = gen_synthetic(&cfg.dataset_spec(), cfg.seed).context("generating dataset")?;
    let mut report = Report::default();
    for &strategy in &cfg.strategies {
        let part = cross_validate(&cfg.cv_config(strategy), &data).with_context(|| format!("auditing {strategy}"))?;
        report.extend(part);
    }
    match &cfg.out {
        Some(path) => {
            emit_results(&report, path, cfg.format).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} rows to {}", report.rows.len(), path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_rows(&report.rows, cfg.format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn ledger(cfg: &ExperimentConfig) -> Result<()> {
    let base = cfg.classes * cfg.samples_per_class;
    let members = member_count(base, cfg.member_fraction) as u64;
    let n = cfg.clients as u64;
    let inputs = LedgerInputs {
        rounds: cfg.rounds as u64,
        model_bytes: cfg.architecture().param_count() as u64 * WIRE_BYTES_PER_SCALAR,
        sample_bytes: cfg.input_dim as u64 * WIRE_BYTES_PER_SCALAR,
        num_classes: cfg.classes as u64,
        embed_dim: cfg.embed_dim as u64,
        shard_sizes: (0..n).map(|k| members / n + u64::from(k < members % n)).collect(),
    };
    let mut out = io::stdout().lock();
    writeln!(out, "strategy,comm_bytes")?;
    for &strategy in &cfg.strategies {
        writeln!(out, "{strategy},{}", ledger_bytes(strategy, &inputs))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(s) => s.resolve().and_then(|cfg| run(&cfg)),
        Command::Ledger(s) => s.resolve().and_then(|cfg| ledger(&cfg)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
