//! Result serialization: CSV or JSON tables plus raw ROC points for plotting.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::attacks::AttackTag;
use crate::error::{Error, Result};
use crate::harness::{PooledCurve, Report, ResultsRow};

pub const CSV_HEADER: [&str; 8] =
    ["strategy", "split_index", "attack", "auc", "tpr_at_fpr", "accuracy", "comm_bytes", "seed"];
pub const ROC_CSV_HEADER: [&str; 6] = ["strategy", "attack", "auc", "threshold", "fpr", "tpr"];
const SIGNIFICANT_DIGITS: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format '{s}'; valid: csv, json"))),
        }
    }
}

/// Formats `x` with six significant digits in the style of C's `%g`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let rounded: f64 = sci.parse().expect("round trip of formatted float");
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{rounded:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to the value its printed form denotes.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format_sig(x).parse().expect("formatted float parses")
}

impl ResultsRow {
    /// The row with every real rounded as it is printed.
    pub fn rounded(&self) -> ResultsRow {
        ResultsRow {
            auc: round_sig(self.auc),
            tpr_at_fpr: round_sig(self.tpr_at_fpr),
            accuracy: round_sig(self.accuracy),
            ..self.clone()
        }
    }
}

/// Writes `rows` in `format`.
pub fn write_rows<W: Write>(rows: &[ResultsRow], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.write_record([
                    r.strategy.clone(),
                    r.split_index.to_string(),
                    r.attack.to_string(),
                    format_sig(r.auc),
                    format_sig(r.tpr_at_fpr),
                    format_sig(r.accuracy),
                    r.comm_bytes.to_string(),
                    r.seed.to_string(),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let rounded: Vec<ResultsRow> = rows.iter().map(ResultsRow::rounded).collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rounded)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RocPoint {
    /// `None` for the initial point above every score.
    threshold: Option<f64>,
    fpr: f64,
    tpr: f64,
}

#[derive(Serialize)]
struct RocRecord<'a> {
    strategy: &'a str,
    attack: AttackTag,
    auc: f64,
    points: Vec<RocPoint>,
}

/// Writes the pooled ROC points of every `(strategy, attack)` pair.
pub fn write_curves<W: Write>(curves: &[PooledCurve], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(ROC_CSV_HEADER)?;
            for c in curves {
                let auc = format_sig(c.auc);
                for ((fpr, tpr), threshold) in c.curve.points().zip(&c.curve.thresholds) {
                    w.write_record([
                        c.strategy.as_str(),
                        c.attack.name(),
                        &auc,
                        &format_sig(*threshold),
                        &format_sig(fpr),
                        &format_sig(tpr),
                    ])?;
                }
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let records: Vec<RocRecord> = curves
                .iter()
                .map(|c| RocRecord {
                    strategy: &c.strategy,
                    attack: c.attack,
                    auc: round_sig(c.auc),
                    points: c
                        .curve
                        .points()
                        .zip(&c.curve.thresholds)
                        .map(|((fpr, tpr), &t)| RocPoint {
                            threshold: t.is_finite().then(|| round_sig(t)),
                            fpr: round_sig(fpr),
                            tpr: round_sig(tpr),
                        })
                        .collect(),
                })
                .collect();
            let mut out = out;
            serde_json::to_writer(&mut out, &records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Sibling file holding the ROC points: `results.csv` -> `results_roc.csv`.
pub fn roc_path(path: &Path, format: OutputFormat) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| format.extension().into());
    path.with_file_name(format!("{stem}_roc.{ext}"))
}

/// Writes the result table to `path` and the ROC points to its sibling file.
pub fn emit_results(report: &Report, path: &Path, format: OutputFormat) -> Result<()> {
    let mut table = BufWriter::new(File::create(path)?);
    write_rows(&report.rows, format, &mut table)?;
    table.flush()?;
    let mut roc = BufWriter::new(File::create(roc_path(path, format))?);
    write_curves(&report.curves, format, &mut roc)?;
    roc.flush()?;
    Ok(())
}
