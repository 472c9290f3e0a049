//! Output files. Every file starts with the same metadata: CSV files as
//! `# key: value` comment lines, JSON files as a top-level `metadata` object.

use std::fs;
use std::path::{Path, PathBuf};

use gme_core::certify::{write_counts_csv, CountsRecord};
use gme_core::{format_real, BASIS_CONVENTION};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub artifact_version: &'static str,
    pub basis_convention: &'static str,
}

impl Metadata {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            artifact_version: env!("CARGO_PKG_VERSION"),
            basis_convention: BASIS_CONVENTION,
        }
    }

    fn csv_header(&self) -> String {
        format!(
            "# command: {}\n# config_hash: {}\n# seed: {}\n# artifact_version: {}\n# basis_convention: {}\n",
            self.command, self.config_hash, self.seed, self.artifact_version, self.basis_convention
        )
    }
}

pub struct Writer {
    dir: PathBuf,
    meta: Metadata,
    format: Format,
    written: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.display().to_string(), e)
}

impl Writer {
    pub fn new(dir: &Path, meta: Metadata, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta,
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            metadata: &'a Metadata,
            data: &'a T,
        }
        let mut bytes = serde_json::to_vec_pretty(&Doc {
            metadata: &self.meta,
            data,
        })
        .map_err(crate::error::numerical)?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    /// Numeric table as `<stem>.csv` or `<stem>.json` depending on the format.
    pub fn table(&mut self, stem: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Table<'a> {
                    columns: &'a [&'a str],
                    rows: &'a [Vec<f64>],
                }
                self.json(&format!("{stem}.json"), &Table { columns, rows })
            }
            Format::Csv => {
                let mut out = self.meta.csv_header().into_bytes();
                {
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(columns).map_err(crate::error::numerical)?;
                    for row in rows {
                        w.write_record(row.iter().map(|&x| format_real(x)))
                            .map_err(crate::error::numerical)?;
                    }
                    w.flush().map_err(|e| CliError::Io(stem.to_string(), e))?;
                }
                self.put(&format!("{stem}.csv"), out)
            }
        }
    }

    /// Counts are always CSV: it is the interchange format.
    pub fn counts(&mut self, name: &str, data: &[CountsRecord]) -> Result<(), CliError> {
        let mut out = self.meta.csv_header().into_bytes();
        write_counts_csv(&mut out, data).map_err(crate::error::numerical)?;
        self.put(name, out)
    }
}
