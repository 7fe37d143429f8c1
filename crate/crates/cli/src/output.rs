//! Tables, report and manifest for one run. Commands build an [`Artifacts`]
//! value; only [`write_all`] touches the filesystem.

use std::fs;
use std::path::Path;

use serde::Serialize;
use slriesz::C64;

use crate::config::RunConfig;
use crate::error::CliError;

/// Fixed-width scientific notation; `-0` is printed as `0`.
pub fn num(x: f64) -> String {
    format!("{:.12e}", x + 0.0)
}

/// A complex value as one field, `re+imi`.
pub fn complex(z: C64) -> String {
    format!("{:.12e}{:+.12e}i", z.re + 0.0, z.im + 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            file,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything a command produces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub report: String,
    pub tables: Vec<Table>,
}

impl Artifacts {
    /// Appends a titled report section.
    pub fn section(&mut self, title: &str, body: &str) {
        if !self.report.is_empty() {
            self.report.push('\n');
        }
        self.report.push_str(&format!("== {title} ==\n"));
        self.report.push_str(body);
        if !body.ends_with('\n') {
            self.report.push('\n');
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    outputs: Vec<String>,
    config: &'a RunConfig,
}

/// Writes the tables, `report.txt` and `manifest.toml` into `dir`.
pub fn write_all(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    art: &Artifacts,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for t in &art.tables {
        let mut w = csv::Writer::from_path(dir.join(t.file))?;
        w.write_record(t.header)?;
        for row in &t.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    fs::write(dir.join("report.txt"), &art.report)?;
    let mut outputs: Vec<String> = art.tables.iter().map(|t| t.file.to_string()).collect();
    outputs.push("report.txt".into());
    let manifest = Manifest {
        tool: "slriesz",
        version: env!("CARGO_PKG_VERSION"),
        command,
        outputs,
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}
