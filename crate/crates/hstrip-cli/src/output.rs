//! Output directory with a SHA-256 manifest.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Loaded;
use crate::{CliError, Common, OUT_ENV};

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_sha256: String,
    files: &'a [FileEntry],
}

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    files: Vec<FileEntry>,
}

impl Output {
    /// `--out`, then `HSTRIP_OUT`, then the config's `output_dir`; the
    /// subcommand name is appended.
    pub fn create(common: &Common, loaded: &Loaded, command: &'static str) -> Result<Self, CliError> {
        let root = common
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| loaded.config.output_dir.clone());
        let dir = root.join(command);
        fs::create_dir_all(&dir)?;
        Ok(Output { dir, command, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry { name: name.to_string(), sha256: hex(bytes) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write(name, &bytes)
    }

    /// Write `manifest.json` and report the directory on stderr.
    pub fn finish(self, loaded: &Loaded) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: loaded.config.seed,
            config_sha256: hex(&loaded.raw),
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        eprintln!("hstrip {}: wrote {}", self.command, self.dir.display());
        Ok(self.dir)
    }
}
