//! Failure type with process exit codes, and the optional TOML config file.
//!
//! Every setting can come from a flag or from the config file named by
//! `--config`; explicit flags always win. Exit codes: 0 success, 1 usage
//! error, 2 data error.

use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

impl CliFailure {
    pub fn usage(message: impl Into<String>) -> Self {
        CliFailure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliFailure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<emoji_combo_core::Error> for CliFailure {
    fn from(e: emoji_combo_core::Error) -> Self {
        CliFailure::data(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliFailure>;

/// Settings accepted in the TOML config file. Field names match the flags
/// with dashes replaced by underscores.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub dict: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub emoji_table: Option<PathBuf>,
    pub k: Option<usize>,
    pub max_target_len: Option<usize>,
    pub dict_size: Option<usize>,
    pub strategy: Option<String>,
    pub thr: Option<f64>,
    pub pen: Option<f64>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub feature_dim: Option<usize>,
    pub serve_port: Option<u16>,
    pub thr_grid: Option<String>,
    pub pen_grid: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliFailure::data(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliFailure::usage(format!("{}: {e}", path.display())))
    }
}

/// Flag value, then config value, then the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value, then config value; an error naming the flag otherwise.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliFailure::usage(format!("--{name} is required (flag or config file)")))
}
