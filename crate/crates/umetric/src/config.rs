//! Settings shared by all subcommands, merged from defaults, an optional TOML
//! file and command-line flags (in increasing priority).

use std::path::Path;

use serde::Deserialize;
use umetric_core::Tolerance;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub tolerance: Tolerance,
    pub format: OutputFormat,
    pub verbosity: u8,
    pub seed: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            tolerance: Tolerance::default(),
            format: OutputFormat::Json,
            verbosity: 0,
            seed: 0,
        }
    }
}

/// The TOML file layout; every key is optional.
///
/// ```toml
/// seed = 7
/// format = "csv"
/// verbosity = 1
///
/// [tolerance]
/// rel = 1e-9
/// abs = 1e-12
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub verbosity: Option<u8>,
    #[serde(default)]
    pub tolerance: ToleranceFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceFile {
    pub rel: Option<f64>,
    pub abs: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub verbosity: u8,
    pub tolerance_rel: Option<f64>,
    pub tolerance_abs: Option<f64>,
}

impl CliConfig {
    pub fn resolve(file: Option<&ConfigFile>, flags: &Overrides) -> Result<Self, CliError> {
        let base = CliConfig::default();
        let empty = ConfigFile::default();
        let file = file.unwrap_or(&empty);
        let rel = flags
            .tolerance_rel
            .or(file.tolerance.rel)
            .unwrap_or(base.tolerance.rel);
        let abs = flags
            .tolerance_abs
            .or(file.tolerance.abs)
            .unwrap_or(base.tolerance.abs);
        let verbosity = if flags.verbosity > 0 {
            flags.verbosity
        } else {
            file.verbosity.unwrap_or(base.verbosity)
        };
        Ok(CliConfig {
            tolerance: Tolerance::new(rel, abs).map_err(|e| CliError::Usage(e.to_string()))?,
            format: flags.format.or(file.format).unwrap_or(base.format),
            verbosity,
            seed: flags.seed.or(file.seed).unwrap_or(base.seed),
        })
    }
}
