//! CSV emission: `#` provenance lines, one header row, numbers with 17
//! significant digits.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub command: &'static str,
    pub config_digest: String,
    pub seed: u64,
}

impl Provenance {
    /// Digest of the effective configuration. The output location is left
    /// out so the same run written to two places gives identical bytes.
    pub fn new(mode: Mode, config: &RunConfig, seed: u64, points: Option<usize>) -> Self {
        let mut effective = config.clone();
        effective.output = None;
        effective.seed = Some(seed);
        let mut hasher = Sha256::new();
        hasher.update(effective.to_toml().as_bytes());
        if let Some(p) = points {
            hasher.update(format!("points = {p}\n").as_bytes());
        }
        Self {
            command: mode.name(),
            config_digest: hex::encode(hasher.finalize()),
            seed,
        }
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Column-oriented numeric data; all columns must have equal length.
    pub fn from_columns(header: Vec<String>, columns: &[&[f64]]) -> Self {
        let n = columns.first().map_or(0, |c| c.len());
        debug_assert!(columns.iter().all(|c| c.len() == n));
        let rows = (0..n)
            .map(|i| columns.iter().map(|c| num(c[i])).collect())
            .collect();
        Self { header, rows }
    }

    pub fn render(&self, provenance: &Provenance) -> CliResult<Vec<u8>> {
        let mut buf = format!(
            "# qee {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            provenance.command,
            provenance.config_digest,
            provenance.seed
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let csv_err = |e: csv::Error| CliError::Config(format!("CSV encoding failed: {e}"));
            w.write_record(&self.header).map_err(csv_err)?;
            for row in &self.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::io("<buffer>", e))?;
        }
        Ok(buf)
    }

    pub fn write(&self, path: &Path, provenance: &Provenance) -> CliResult<()> {
        let bytes = self.render(provenance)?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }
}
