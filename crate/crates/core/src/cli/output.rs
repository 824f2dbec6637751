//! CSV files with a `#`-prefixed manifest block.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::Result;

use super::config::Settings;

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub seed_from_entropy: bool,
    pub config_hash: String,
    /// Loadable config text of the settings that affect results.
    pub config: String,
    /// Same, plus `threads` and `out`.
    pub full_config: String,
}

impl RunManifest {
    pub fn new(command: &str, settings: &Settings) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed: settings.u64("seed").ok(),
            seed_from_entropy: settings.seed_from_entropy,
            config_hash: settings.hash(command),
            config: settings.to_config_text(false),
            full_config: settings.to_config_text(true),
        }
    }

    /// Header lines, each starting with `#`. Provenance lines start with `##`,
    /// so stripping one leading `#` leaves a config file that reproduces the run.
    pub fn header(&self) -> String {
        self.header_with(&self.config)
    }

    fn header_with(&self, config: &str) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "## lqmargin {} {}", self.command, self.version);
        let _ = writeln!(h, "## config_hash: {}", self.config_hash);
        if let Some(seed) = self.seed {
            let origin = if self.seed_from_entropy { " (drawn from system entropy)" } else { "" };
            let _ = writeln!(h, "## seed: {seed}{origin}");
        }
        for line in config.lines() {
            let _ = writeln!(h, "# {line}");
        }
        h
    }

    /// `manifest.txt`: the header plus wall-clock time. Kept out of the CSVs so
    /// reruns produce identical files.
    pub fn write_manifest(&self, out: &Path, elapsed: Duration) -> Result<PathBuf> {
        let path = out.join("manifest.txt");
        let mut text = self.header_with(&self.full_config);
        let _ = writeln!(text, "## wall_clock_seconds: {}", elapsed.as_secs_f64());
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Shortest round-trip decimal; empty for absent values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, manifest: &RunManifest) -> Result<()> {
        let mut text = manifest.header();
        text.push_str(&self.columns.join(","));
        text.push('\n');
        for row in &self.rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(path, text)?;
        Ok(())
    }
}
