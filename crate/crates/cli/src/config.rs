//! Layered run configuration: defaults, then a TOML file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topo_adv::attack::AttackConfig;
use topo_adv::classifier::TrainConfig;
use topo_adv::data_io::{DatasetConfig, Split};

use crate::error::CliError;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "TOPO_ADV_CONFIG";

/// File written next to every output holding the resolved configuration.
pub const ECHO_FILE: &str = "run_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub split: Split,
    /// Only the first `limit` samples of the split are processed.
    pub limit: Option<usize>,
    /// When non-empty, `attack` runs once per listed epsilon.
    pub eps_sweep: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            split: Split::Test,
            limit: None,
            eps_sweep: Vec::new(),
        }
    }
}

/// Everything that influences an output. Paths are not part of it, so the
/// echo of one run can drive another run writing elsewhere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    pub attack: AttackConfig,
}

impl RunConfig {
    /// Defaults overlaid with `path`, or with the file named by
    /// [`CONFIG_ENV`] when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let path: Option<PathBuf> = match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dataset.validate()?;
        self.train.validate()?;
        self.attack.validate()?;
        if self.run.limit == Some(0) {
            return Err(CliError::Config("run.limit must be >= 1".into()));
        }
        if let Some(e) = self.run.eps_sweep.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(CliError::Config(format!("run.eps_sweep entry {e} must be > 0")));
        }
        // TOML integers are signed 64-bit
        for (name, seed) in [
            ("dataset.seed", self.dataset.seed),
            ("train.seed", self.train.seed),
            ("attack.seed", self.attack.seed),
            ("attack.embed_seed", self.attack.embed_seed),
        ] {
            if seed > i64::MAX as u64 {
                return Err(CliError::Config(format!("{name} must be <= {}", i64::MAX)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn write_echo(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.to_toml()?.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
