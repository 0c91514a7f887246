//! CSV tables with a commented header carrying the schema version, summary
//! values and the resolved configuration.

use std::path::Path;

use crate::config::SimulationSpec;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

const CONFIG_BEGIN: &str = "# ---- config ----";
const CONFIG_END: &str = "# ---- end config ----";

/// Column names plus rows, written after the header.
pub struct CsvTable {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// `key = value` lines shown in the header.
    pub summary: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new(name: &'static str, columns: Vec<String>) -> Self {
        CsvTable {
            name,
            columns,
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self, spec: &SimulationSpec) -> Result<String, CliError> {
        let mut out = String::new();
        out.push_str("# hystdiff output\n");
        out.push_str(&format!("# schema_version = {SCHEMA_VERSION}\n"));
        out.push_str(&format!("# table = \"{}\"\n", self.name));
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(CONFIG_BEGIN);
        out.push('\n');
        for line in spec.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(CONFIG_END);
        out.push('\n');
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn write(&self, spec: &SimulationSpec, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.render(spec)?).map_err(|source| CliError::Io { path, source })
    }
}

/// The configuration embedded in a rendered table, as a TOML document.
pub fn config_from_header(text: &str) -> Option<String> {
    let mut lines = text.lines().skip_while(|l| *l != CONFIG_BEGIN);
    lines.next()?;
    let mut doc = String::new();
    for line in lines {
        if line == CONFIG_END {
            return Some(doc);
        }
        doc.push_str(line.strip_prefix("# ").or_else(|| line.strip_prefix('#'))?);
        doc.push('\n');
    }
    None
}

/// Shortest text that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
