//! Table and sidecar writers.
//!
//! Floats go to CSV with 17 significant digits so they round-trip exactly.
//! Undefined values (ratios at `kappa1 = 0`, closed forms outside their
//! domain) are empty cells; any non-finite value is a hard failure.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Bumped whenever a column or sidecar key changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub type Cell = Option<f64>;

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn check_finite(&self, name: &str) -> Result<(), CliError> {
        for (i, row) in self.rows.iter().enumerate() {
            for (col, v) in self.columns.iter().zip(row) {
                if let Some(x) = v {
                    if !x.is_finite() {
                        return Err(CliError::Numerical(format!("{name}: row {i} column {col} is {x}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.to_string(), json!(v)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "schema_version": SCHEMA_VERSION, "columns": self.columns, "rows": rows })
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Writer {
    dir: PathBuf,
    format: Format,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn create(cfg: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
        Ok(Self {
            dir: cfg.out.clone(),
            format: cfg.format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Writes `stem.csv` or `stem.json` depending on the configured format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        table.check_finite(stem)?;
        match self.format {
            Format::Csv => {
                let path = self.path(&format!("{stem}.csv"));
                write_csv(&path, table)?;
                self.written.push(path.clone());
                Ok(path)
            }
            Format::Json => self.json(&format!("{stem}.json"), &table.to_json()),
        }
    }

    pub fn json(&mut self, file: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let path = self.path(file);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("cannot serialize {file}: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Metadata file describing the run; `results` is command specific.
    pub fn sidecar(
        &mut self,
        file: &str,
        cfg: &RunConfig,
        tables: &[PathBuf],
        results: Value,
    ) -> Result<PathBuf, CliError> {
        let names: Vec<String> = tables
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": cfg.command,
            "versions": {
                "quench-cli": env!("CARGO_PKG_VERSION"),
                "quench-core": quench_core::VERSION,
            },
            "timestamp": unix_time(),
            "config": cfg,
            "tables": names,
            "results": results,
        });
        self.json(file, &doc)
    }
}

fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Numerical(format!("csv error: {other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.map(format_float).unwrap_or_default()))
            .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// serde_json silently turns NaN into `null`, so every computed float
/// headed for a sidecar goes through here.
pub fn finite(name: &str, x: f64) -> Result<Value, CliError> {
    if x.is_finite() {
        Ok(json!(x))
    } else {
        Err(CliError::Numerical(format!("{name} is {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        for x in [0.1, 1.0 / 3.0, 9.084_510_293_481_2, -1e-300, 6.25] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn non_finite_cells_rejected() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![Some(1.0), None]);
        assert!(t.check_finite("t").is_ok());
        t.push(vec![Some(f64::NAN), None]);
        assert!(matches!(t.check_finite("t"), Err(CliError::Numerical(_))));
    }

    #[test]
    fn json_rows_keep_empty_cells_as_null() {
        let mut t = Table::new(vec!["x", "r"]);
        t.push(vec![Some(0.5), None]);
        let v = t.to_json();
        assert_eq!(v["rows"][0]["x"], json!(0.5));
        assert!(v["rows"][0]["r"].is_null());
    }
}
