//! Report and CSV emission.
//!
//! Reports serialize through `serde_json::Value`, whose object map is
//! BTree-backed, so keys always come out sorted and a fixed config and seed
//! produce byte-identical files. Wall-clock timings would break that
//! contract, so the `timings` block records deterministic work counts and
//! wall time goes to stderr only.

use serde::Serialize;
use serde_json::Value;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::CliError;

/// Stable run identifier derived from the effective inputs.
pub fn run_id(subcommand: &str, config_echo: &Value, seed: u64) -> String {
    let mut h = DefaultHasher::new();
    subcommand.hash(&mut h);
    config_echo.to_string().hash(&mut h);
    seed.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Assembles the report document with the fixed key layout.
pub fn assemble(
    subcommand: &str,
    config_echo: &Value,
    seed: u64,
    verdicts: Vec<Value>,
    worst_witnesses: Vec<Value>,
    sample_counts: Vec<(String, usize)>,
) -> Value {
    let counts: serde_json::Map<String, Value> = sample_counts
        .into_iter()
        .map(|(k, v)| (k, Value::from(v)))
        .collect();
    serde_json::json!({
        "run-id": run_id(subcommand, config_echo, seed),
        "subcommand": subcommand,
        "config-echo": config_echo,
        "verdicts": verdicts,
        "worst-witnesses": worst_witnesses,
        "timings": { "sample-counts": counts },
    })
}

pub fn write_json(out_dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    let path = out_dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// CSV writer with full round-trip float precision.
pub struct Csv {
    path: PathBuf,
    buf: String,
}

impl Csv {
    pub fn new(out_dir: &Path, name: &str, header: &[&str]) -> Csv {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv {
            path: out_dir.join(name),
            buf,
        }
    }

    pub fn row(&mut self, fields: &[CsvField<'_>]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match f {
                CsvField::Num(v) => self.buf.push_str(&format!("{v}")),
                CsvField::Text(t) => self.buf.push_str(t),
                CsvField::Bool(b) => self.buf.push_str(if *b { "true" } else { "false" }),
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let mut file = std::fs::File::create(&self.path).map_err(|source| CliError::Io {
            path: self.path.display().to_string(),
            source,
        })?;
        file.write_all(self.buf.as_bytes())
            .map_err(|source| CliError::Io {
                path: self.path.display().to_string(),
                source,
            })?;
        Ok(self.path)
    }
}

pub enum CsvField<'a> {
    Num(f64),
    Text(&'a str),
    Bool(bool),
}

/// Residual-table header: `s, a, m1..., m2..., residual`.
pub fn residual_header(dim: usize) -> Vec<String> {
    let mut cols = vec!["s".to_string(), "a".to_string()];
    for i in 1..=dim {
        cols.push(format!("m1_{i}"));
    }
    for i in 1..=dim {
        cols.push(format!("m2_{i}"));
    }
    cols.push("residual".to_string());
    cols
}

/// File-name-safe tag for a function: index plus sanitized name.
pub fn file_tag(idx: usize, name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{idx}_{safe}")
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize infallibly")
}
