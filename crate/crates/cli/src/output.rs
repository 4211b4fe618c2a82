//! CSV and JSON artifacts with a provenance header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the canonical scenario JSON.
    pub scenario_sha256: String,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, canonical: &str) -> Self {
        let digest = Sha256::digest(canonical.as_bytes());
        let hash = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self {
            tool: "dmd",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            scenario_sha256: hash,
        }
    }

    fn header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# seed: {}\n# scenario-sha256: {}\n",
            self.tool, self.version, self.command, self.seed, self.scenario_sha256
        )
    }
}

/// Long-format table: key columns, then `quantity,value,units`.
#[derive(Debug, Clone)]
pub struct Table {
    keys: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(keys: &[&'static str]) -> Self {
        Self {
            keys: keys.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, keys: &[String], quantity: &str, value: impl Into<Value>, units: &str) {
        assert_eq!(keys.len(), self.keys.len(), "key arity");
        let mut row = keys.to_vec();
        row.push(quantity.to_string());
        row.push(value.into().0);
        row.push(units.to_string());
        self.rows.push(row);
    }

    fn render(&self) -> Result<String, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.keys.clone();
        header.extend(["quantity", "value", "units"]);
        w.write_record(&header).map_err(|e| Failure::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Failure::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
    }
}

/// A formatted cell. Floats use the shortest round-trip form.
pub struct Value(String);

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value(format!("{v:?}"))
    }
}

macro_rules! int_value {
    ($($t:ty),*) => {$(
        impl From<$t> for Value {
            fn from(v: $t) -> Self {
                Value(v.to_string())
            }
        }
    )*};
}

int_value!(u32, u64, u128, usize, i64, bool);

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value(v)
    }
}

pub struct Artifacts {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
pub fn write(dir: &Path, stem: &str, prov: &Provenance, table: &Table, summary: serde_json::Value) -> Result<Artifacts, Failure> {
    write_raw(dir, stem, prov, &table.render()?, summary)
}

/// Like [`write`] with a CSV body rendered by the caller.
pub fn write_raw(dir: &Path, stem: &str, prov: &Provenance, body: &str, summary: serde_json::Value) -> Result<Artifacts, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let text = format!("{}{body}", prov.header());
    fs::write(&csv, text).map_err(|e| Failure::Io(format!("{}: {e}", csv.display())))?;
    let doc = json!({ "provenance": prov, "result": summary });
    let mut body = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
    body.push('\n');
    fs::write(&json_path, body).map_err(|e| Failure::Io(format!("{}: {e}", json_path.display())))?;
    Ok(Artifacts { csv, json: json_path })
}
