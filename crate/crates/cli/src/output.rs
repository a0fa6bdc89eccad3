use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// An output directory that tracks what was written into it.
pub struct OutputDir {
    root: PathBuf,
    subcommand: &'static str,
    config_toml: String,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    param_hash: String,
    status: &'a str,
    files: &'a [String],
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputDir {
    /// Create the directory and echo the resolved configuration into it.
    pub fn create(root: &Path, subcommand: &'static str, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        let config_toml = cfg.to_toml();
        std::fs::write(root.join("config.toml"), &config_toml)?;
        Ok(Self {
            root: root.to_path_buf(),
            subcommand,
            config_toml,
            files: vec!["config.toml".into()],
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Open `name` for writing and register it in the manifest.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let f = File::create(self.path(name)).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.register(name);
        Ok(BufWriter::new(f))
    }

    pub fn register(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn param_hash(&self) -> String {
        sha256_hex(&self.config_toml)
    }

    pub fn finish(mut self, status: &str) -> Result<(), CliError> {
        self.register("manifest.json");
        let m = Manifest {
            tool: "emhd",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            param_hash: self.param_hash(),
            status,
            files: &self.files,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        std::fs::write(self.root.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}
