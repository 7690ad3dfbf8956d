//! Table, Lorenz-curve, and metadata emission. Numbers use shortest
//! round-trip formatting, and identical manifests produce byte-identical
//! files regardless of worker count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Number, Value};
use thiserror::Error;
use yardsale::{MetricSummary, SweepResult};

use crate::manifest::{OutputFormat, RunManifest};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot serialize metadata: {0}")]
    Meta(#[from] serde_json::Error),
}

/// Paths produced by one emission.
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub table: PathBuf,
    pub lorenz: PathBuf,
    pub metadata: PathBuf,
}

const METRIC_COLUMNS: &[&str] = &[
    "gini",
    "gini_excl_zwa",
    "zero_wealth_fraction",
    "top_1pct_share",
    "top_10pct_share",
    "bottom_90pct_share",
];

fn metric_summaries(row: &yardsale::SweepRow) -> [&MetricSummary; 6] {
    let e = &row.ensemble;
    [
        &e.gini,
        &e.gini_excl_zwa,
        &e.zero_wealth_fraction,
        &e.top_1pct_share,
        &e.top_10pct_share,
        &e.bottom_90pct_share,
    ]
}

/// Sibling path with the extension replaced by `suffix.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".to_string());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), EmitError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| EmitError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, bytes).map_err(|source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_table(result: &SweepResult) -> String {
    let mut out = String::new();
    for name in &result.param_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("n_replicas,converged_fraction,mean_steps");
    for metric in METRIC_COLUMNS {
        out.push_str(&format!(",{metric}_mean,{metric}_stderr"));
    }
    out.push('\n');

    for row in &result.rows {
        for value in &row.params {
            out.push_str(&value.to_string());
            out.push(',');
        }
        out.push_str(&format!(
            "{},{},{}",
            row.ensemble.n_replicas, row.ensemble.converged_fraction, row.ensemble.mean_steps
        ));
        for summary in metric_summaries(row) {
            if summary.n == 0 {
                out.push_str(",,");
            } else {
                out.push_str(&format!(",{},{}", summary.mean, summary.stderr));
            }
        }
        out.push('\n');
    }
    out
}

fn jsonl_table(result: &SweepResult) -> String {
    let mut out = String::new();
    for row in &result.rows {
        // serde_json's default map keeps keys sorted, which is deterministic.
        let mut object = Map::new();
        for (name, value) in result.param_names.iter().zip(&row.params) {
            object.insert(name.clone(), json_f64(*value));
        }
        object.insert(
            "n_replicas".into(),
            Value::Number(Number::from(row.ensemble.n_replicas)),
        );
        object.insert(
            "converged_fraction".into(),
            json_f64(row.ensemble.converged_fraction),
        );
        object.insert("mean_steps".into(), json_f64(row.ensemble.mean_steps));
        for (metric, summary) in METRIC_COLUMNS.iter().zip(metric_summaries(row)) {
            if summary.n == 0 {
                object.insert(format!("{metric}_mean"), Value::Null);
                object.insert(format!("{metric}_stderr"), Value::Null);
            } else {
                object.insert(format!("{metric}_mean"), json_f64(summary.mean));
                object.insert(format!("{metric}_stderr"), json_f64(summary.stderr));
            }
        }
        out.push_str(&Value::Object(object).to_string());
        out.push('\n');
    }
    out
}

fn json_f64(x: f64) -> Value {
    Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn lorenz_table(result: &SweepResult) -> String {
    let mut out = String::new();
    for name in &result.param_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("F,L\n");
    for row in &result.rows {
        let mut prefix = String::new();
        for value in &row.params {
            prefix.push_str(&value.to_string());
            prefix.push(',');
        }
        for &(f, l) in &row.ensemble.mean_lorenz {
            out.push_str(&prefix);
            out.push_str(&format!("{f},{l}\n"));
        }
    }
    out
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    manifest: &'a RunManifest,
}

/// Write the results table, the Lorenz curves, and the metadata sidecar next
/// to the manifest's output path.
pub fn emit_results(
    result: &SweepResult,
    manifest: &RunManifest,
) -> Result<EmittedFiles, EmitError> {
    let table_path = manifest.out.clone();
    let lorenz_path = sibling(&table_path, "lorenz.csv");
    let meta_path = sibling(&table_path, "meta.json");

    let table = match manifest.format {
        OutputFormat::Csv => csv_table(result),
        OutputFormat::Jsonl => jsonl_table(result),
    };
    write_file(&table_path, table.as_bytes())?;
    write_file(&lorenz_path, lorenz_table(result).as_bytes())?;

    let metadata = Metadata {
        tool: "yardsale",
        version: env!("CARGO_PKG_VERSION"),
        master_seed: manifest.seed,
        manifest,
    };
    let mut meta_bytes = serde_json::to_vec_pretty(&metadata)?;
    meta_bytes.push(b'\n');
    write_file(&meta_path, &meta_bytes)?;

    Ok(EmittedFiles {
        table: table_path,
        lorenz: lorenz_path,
        metadata: meta_path,
    })
}

/// One human-readable line per row on stdout.
pub fn print_summary(result: &SweepResult, mut to: impl Write) -> std::io::Result<()> {
    for row in &result.rows {
        let params: Vec<String> = result
            .param_names
            .iter()
            .zip(&row.params)
            .map(|(name, value)| format!("{name}={value}"))
            .collect();
        let prefix = if params.is_empty() {
            "point".to_string()
        } else {
            params.join(" ")
        };
        writeln!(
            to,
            "{prefix}: gini {:.4} +- {:.4}, zwa {:.4}, top1 {:.4}, converged {:.0}%",
            row.ensemble.gini.mean,
            row.ensemble.gini.stderr,
            row.ensemble.zero_wealth_fraction.mean,
            row.ensemble.top_1pct_share.mean,
            row.ensemble.converged_fraction * 100.0
        )?;
    }
    Ok(())
}
