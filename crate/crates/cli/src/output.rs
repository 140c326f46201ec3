//! Output directory bookkeeping: CSV tables and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use alaam::{AlaamError, Result};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Timing {
    phase: String,
    seconds: f64,
}

/// Manifest written last; lists every other file in the directory that
/// this run produced.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    chain_seeds: Vec<String>,
    config: &'a RunConfig,
    timings: Vec<Timing>,
    files: Vec<FileEntry>,
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    timings: Vec<Timing>,
    phase_start: Instant,
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), fmt)
}

fn csv_err(e: csv::Error) -> AlaamError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AlaamError::Io(io),
        other => AlaamError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
            phase_start: Instant::now(),
        })
    }

    /// Closes the current timing phase under `name`.
    pub fn lap(&mut self, name: &str) {
        self.timings.push(Timing {
            phase: name.to_owned(),
            seconds: self.phase_start.elapsed().as_secs_f64(),
        });
        self.phase_start = Instant::now();
    }

    /// Writes a table with a header row.
    pub fn csv<I, R>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(self.dir.join(name))
            .map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row.into_iter().collect::<Vec<_>>())
                .map_err(csv_err)?;
        }
        w.flush()?;
        self.files.push(name.to_owned());
        log::info!("wrote {}", self.dir.join(name).display());
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_owned());
        Ok(())
    }

    /// Writes `manifest.json` via a temporary file and a rename, so a
    /// partially written manifest is never visible.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<()> {
        let effective = toml::to_string(config).map_err(|e| AlaamError::Config(e.to_string()))?;
        self.text("config.toml", &effective)?;
        let mut files = Vec::with_capacity(self.files.len());
        for f in &self.files {
            files.push(FileEntry {
                path: f.clone(),
                bytes: std::fs::metadata(self.dir.join(f))?.len(),
            });
        }
        let seed = config.sampler.seed;
        // chain k draws from stream k + 1 of the run seed
        let chain_seeds = (0..config.sampler.chains)
            .map(|k| format!("{seed}/stream{}", k + 1))
            .collect();
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            chain_seeds,
            config,
            timings: std::mem::take(&mut self.timings),
            files,
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| AlaamError::Io(e.into()))?;
        let tmp = self.dir.join("manifest.json.tmp");
        std::fs::write(&tmp, json + "\n")?;
        std::fs::rename(&tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}
