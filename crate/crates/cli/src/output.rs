//! CSV and JSON writers that embed the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Bumped whenever a column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Comment block: tool line, schema line, then the config as `# `-prefixed TOML.
pub fn config_echo(schema: &str, config: &ExperimentConfig) -> String {
    let mut s = format!("# phasecal {}\n# schema: {schema} v{SCHEMA_VERSION}\n", env!("CARGO_PKG_VERSION"));
    for line in config.to_toml().lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

pub struct CsvTable {
    schema: &'static str,
    columns: &'static [&'static str],
    body: String,
}

impl CsvTable {
    pub fn new(schema: &'static str, columns: &'static [&'static str]) -> Self {
        CsvTable {
            schema,
            columns,
            body: String::new(),
        }
    }

    pub fn row<I, S>(&mut self, values: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        let mut count = 0;
        for v in values {
            if !first {
                self.body.push(',');
            }
            self.body.push_str(v.as_ref());
            first = false;
            count += 1;
        }
        debug_assert_eq!(count, self.columns.len(), "row width for {}", self.schema);
        self.body.push('\n');
    }

    pub fn render(&self, config: &ExperimentConfig) -> String {
        format!("{}{}\n{}", config_echo(self.schema, config), self.columns.join(","), self.body)
    }

    pub fn write(&self, dir: &Path, name: &str, config: &ExperimentConfig) -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, self.render(config))?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    schema: String,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, schema: &str, config: &ExperimentConfig, body: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let doc = WithConfig {
        schema: format!("{schema} v{SCHEMA_VERSION}"),
        config,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Fixed six decimals, for large grids.
pub fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), num)
}

/// `10·log10(p)` with a floor at −300 dB for zero power.
pub fn power_db(p: f64) -> f64 {
    10.0 * p.max(1e-30).log10()
}
