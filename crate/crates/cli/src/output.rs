//! Output writers: CSV with `#`-prefixed metadata header, or a single JSON
//! document `{meta, rows}`. Numbers carry 17 significant digits so doubles
//! round-trip losslessly.

use std::io::Write;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use crate::config::Resolved;
use crate::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Format a double with 17 significant digits.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(command: &str, resolved: &Resolved, columns: &[&str]) -> Self {
        let mut meta = vec![
            ("artifact_version".to_string(), ARTIFACT_VERSION.to_string()),
            ("command".to_string(), command.to_string()),
            ("nu".to_string(), fmt(resolved.nu)),
            ("g".to_string(), fmt(resolved.g)),
            ("l0".to_string(), fmt(resolved.l0)),
            ("rho_a".to_string(), fmt(resolved.rho_a)),
            ("jobs".to_string(), resolved.jobs.to_string()),
        ];
        meta.push(("format".to_string(), resolved.format.clone()));
        Self {
            meta,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, key: &str, value: String) {
        self.meta.push((key.to_string(), value));
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), Value::String(v.clone()));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(c.clone(), Value::String(v.clone()));
                }
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "meta": Value::Object(meta), "rows": rows });
        format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
    }

    /// Render in the requested format and write to `out` (stdout if none).
    /// `ABLRT_OUT_DIR` overrides the output directory only.
    pub fn write(&self, format: &str, out: Option<&str>) -> Result<(), CliError> {
        let text = match format {
            "csv" => self.to_csv(),
            "json" => self.to_json(),
            other => return Err(CliError::Validation(format!("unknown format '{other}'"))),
        };
        match out {
            None => {
                std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(CliError::Io)?;
            }
            Some(path) => {
                let mut p = PathBuf::from(path);
                if let Ok(dir) = std::env::var("ABLRT_OUT_DIR") {
                    let name = p
                        .file_name()
                        .ok_or_else(|| CliError::Validation(format!("bad output path {path}")))?
                        .to_owned();
                    p = PathBuf::from(dir).join(name);
                }
                std::fs::write(&p, text).map_err(CliError::Io)?;
                eprintln!("wrote {}", p.display());
            }
        }
        Ok(())
    }
}
