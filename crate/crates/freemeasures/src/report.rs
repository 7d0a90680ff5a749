use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<T> {
    pub tool_version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub records: Vec<T>,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: String, seed: Option<u64>, records: Vec<T>) -> Self {
        Self {
            tool_version: TOOL_VERSION,
            command,
            seed,
            records,
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, String> {
        match format {
            OutputFormat::Json => serde_json::to_string_pretty(self)
                .map(|s| s + "\n")
                .map_err(|e| e.to_string()),
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &self.records {
                    w.serialize(r).map_err(|e| e.to_string())?;
                }
                let bytes = w.into_inner().map_err(|e| e.to_string())?;
                String::from_utf8(bytes).map_err(|e| e.to_string())
            }
        }
    }

    /// Writes to `out`, or to stdout when no path is given.
    pub fn emit(&self, format: OutputFormat, out: Option<&Path>) -> Result<(), String> {
        let text = self.render(format)?;
        match out {
            Some(path) => File::create(path)
                .and_then(|mut f| f.write_all(text.as_bytes()))
                .map_err(|e| format!("{}: {e}", path.display())),
            None => io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string()),
        }
    }
}
