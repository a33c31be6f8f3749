use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use social_sampling::evaluation::CvKind;
use social_sampling::models::{ModelFamily, ModelSpec};
use social_sampling::pipeline::{AmountSource, PerformanceMetric, SkillDistribution};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

fn default_family() -> ModelFamily {
    ModelFamily::SocialSampling
}

fn one() -> f64 {
    1.0
}

fn default_level() -> f64 {
    0.95
}

fn default_families() -> Vec<ModelFamily> {
    ModelFamily::ALL.to_vec()
}

fn default_kind() -> CvKind {
    CvKind::ByUser10fold
}

fn default_fraction() -> f64 {
    0.1
}

fn default_folds() -> usize {
    10
}

fn default_bins() -> String {
    "default".into()
}

fn default_metric() -> PerformanceMetric {
    PerformanceMetric::Roi
}

fn default_window() -> u32 {
    30
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub panel: Option<PathBuf>,
    #[serde(default = "default_family")]
    pub family: ModelFamily,
    /// Popularity exponent held fixed for the social-sampling family.
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub gamma_profile: Vec<f64>,
    #[serde(default)]
    pub skill_intervals: bool,
    /// Trade log used for the skill intervals.
    #[serde(default)]
    pub trades: Option<PathBuf>,
    #[serde(default = "default_level")]
    pub skill_level: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub panel: Option<PathBuf>,
    #[serde(default = "default_families")]
    pub families: Vec<ModelFamily>,
    #[serde(default = "default_kind")]
    pub scheme: CvKind,
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_bins")]
    pub bins: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub trades: Option<PathBuf>,
    #[serde(default = "default_metric")]
    pub metric: PerformanceMetric,
    #[serde(default = "default_window")]
    pub window_days: u32,
    #[serde(default = "default_true")]
    pub closed_trades_only: bool,
    #[serde(default)]
    pub amount_source: AmountSource,
    #[serde(default)]
    pub impute: bool,
}

/// Mirrors `SyntheticMarketConfig`, with every field optional so that flags
/// can fill the gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default)]
    pub n_users: Option<usize>,
    #[serde(default)]
    pub n_days: Option<usize>,
    #[serde(default)]
    pub decisions_per_day: Option<u64>,
    #[serde(default)]
    pub generator_model: Option<ModelSpec>,
    #[serde(default)]
    pub trader_skill: Option<SkillDistribution>,
    #[serde(default)]
    pub unfollow_rate: Option<f64>,
    #[serde(default)]
    pub initial_popularity_max: Option<u64>,
    #[serde(default)]
    pub window_days: Option<u32>,
    #[serde(default)]
    pub start_date: Option<chrono::NaiveDate>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Load a command's configuration from a config file or a previous run's
/// manifest. Missing path means an empty object, so defaults apply.
pub fn load_config<T: DeserializeOwned>(path: Option<&Path>, command: &str) -> CliResult<T> {
    let value = match path {
        None => Value::Object(Default::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: not valid JSON: {e}", p.display())))?;
            extract_config(value, command, p)?
        }
    };
    serde_json::from_value(value).map_err(|e| CliError::config(format!("{command} config: {e}")))
}

fn extract_config(value: Value, command: &str, path: &Path) -> CliResult<Value> {
    let Value::Object(mut obj) = value else {
        return Err(CliError::config(format!(
            "{}: top level must be a JSON object",
            path.display()
        )));
    };
    // A manifest carries the resolved config of the run it records.
    if obj.contains_key("command") && obj.contains_key("config") {
        let recorded = obj
            .get("command")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        if recorded != command {
            return Err(CliError::config(format!(
                "{}: manifest records a `{recorded}` run, not `{command}`",
                path.display()
            )));
        }
        let inner = obj.remove("config").expect("checked above");
        return extract_config(inner, command, path);
    }
    match obj.remove("schema_version") {
        None => Err(CliError::config(format!(
            "{}: missing field `schema_version`",
            path.display()
        ))),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => Ok(Value::Object(obj)),
        Some(v) => Err(CliError::config(format!(
            "{}: schema_version {v} is not supported (expected {SCHEMA_VERSION})",
            path.display()
        ))),
    }
}

/// Serialize a resolved config with its schema version.
pub fn versioned<T: Serialize>(config: &T) -> CliResult<Value> {
    let mut value = serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?;
    if let Value::Object(obj) = &mut value {
        obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    }
    Ok(value)
}

/// Absolute form of an input path; fails if it does not exist.
pub fn resolve_input(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest(path: &Path) -> CliResult<InputDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(InputDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Record of one run. Its `config` is enough to repeat the run through
/// `--config manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub out_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<usize>,
    pub duration_seconds: f64,
}
