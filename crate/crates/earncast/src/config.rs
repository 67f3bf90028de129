//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use earncast_core::rollcast::BacktestConfig;
use earncast_core::synth::SignalSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub schema: PathBuf,
    pub panel: PathBuf,
    /// Company attributes for the sample filters; without it every company
    /// passes.
    pub meta: Option<PathBuf>,
    pub consensus: Option<PathBuf>,
    pub output_dir: PathBuf,
}

/// One file drives every command. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub paths: Paths,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub synth: SignalSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(#[from] earncast_core::Error),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.backtest.validate()?;
        Ok(())
    }

    /// Overrides every seed in the file.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.backtest.search.seed = seed;
        self.synth.seed = seed;
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output_dir)
    }

    /// Canonical TOML of the effective configuration.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }
}
