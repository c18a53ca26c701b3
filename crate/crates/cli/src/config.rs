//! Experiment files.
//!
//! ```toml
//! name = "demo"
//!
//! [data]
//! path = "data/train.csv"          # or a [data.synth] table
//!
//! [split]
//! ratio = 0.8
//! seed = 42
//!
//! [augment]
//! mode = "leak_free"
//! seed = 7
//! [[augment.steps]]
//! kind = "savgol"
//!
//! [run]
//! stages = ["pre", "post"]
//!
//! [[classifiers]]
//! name = "KNN"
//! model = "knn"
//! k = 4
//!
//! [output]
//! dir = "out/demo"
//! formats = ["json", "csv", "md", "svg"]
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use lcml_core::augment::PipelineConfig;
use lcml_core::models::ClassifierConfig;
use lcml_core::synth::TransitRanges;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub augment: PipelineConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub classifiers: Vec<NamedClassifier>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

/// Parameters for a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "SynthSpec::default_positives")]
    pub positives: usize,
    #[serde(default = "SynthSpec::default_negatives")]
    pub negatives: usize,
    #[serde(default = "SynthSpec::default_length")]
    pub length: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ranges: TransitRanges,
}

impl SynthSpec {
    fn default_positives() -> usize {
        37
    }
    fn default_negatives() -> usize {
        5050
    }
    fn default_length() -> usize {
        3197
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            positives: Self::default_positives(),
            negatives: Self::default_negatives(),
            length: Self::default_length(),
            seed: 0,
            ranges: TransitRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "SplitConfig::default_ratio")]
    pub ratio: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SplitConfig {
    fn default_ratio() -> f64 {
        0.8
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: Self::default_ratio(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Raw flux, no augmentation.
    Pre,
    /// After the augmentation pipeline.
    Post,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Pre => "pre",
            Stage::Post => "post",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "RunConfig::default_stages")]
    pub stages: Vec<Stage>,
    /// Save fitted models next to the reports.
    #[serde(default = "RunConfig::default_save_models")]
    pub save_models: bool,
}

impl RunConfig {
    fn default_stages() -> Vec<Stage> {
        vec![Stage::Pre, Stage::Post]
    }
    fn default_save_models() -> bool {
        true
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            stages: Self::default_stages(),
            save_models: Self::default_save_models(),
        }
    }
}

/// A classifier table: `name` plus the model's own fields.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct NamedClassifier {
    pub name: String,
    pub model: ClassifierConfig,
}

impl TryFrom<toml::Table> for NamedClassifier {
    type Error = String;

    fn try_from(mut table: toml::Table) -> Result<Self, String> {
        let name = match table.remove("name") {
            Some(toml::Value::String(s)) if !s.trim().is_empty() => s,
            Some(_) => return Err("classifier name must be a non-empty string".into()),
            None => return Err("classifier entry is missing `name`".into()),
        };
        let model = ClassifierConfig::deserialize(toml::Value::Table(table))
            .map_err(|e| format!("classifier {name:?}: {e}"))?;
        Ok(NamedClassifier { name, model })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Md,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "OutputConfig::default_dir")]
    pub dir: PathBuf,
    #[serde(default = "OutputConfig::default_formats")]
    pub formats: Vec<Format>,
    /// Append the quoted literature rows to the comparison table.
    #[serde(default = "OutputConfig::default_literature")]
    pub literature: bool,
}

impl OutputConfig {
    fn default_dir() -> PathBuf {
        PathBuf::from("out")
    }
    fn default_formats() -> Vec<Format> {
        vec![Format::Json, Format::Csv, Format::Md]
    }
    fn default_literature() -> bool {
        true
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: Self::default_dir(),
            formats: Self::default_formats(),
            literature: Self::default_literature(),
        }
    }
}

/// A parsed config together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn data_path(&self) -> Option<PathBuf> {
        self.config.data.path.as_deref().map(|p| self.resolve(p))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.dir)
    }
}

pub fn parse(text: &str, origin: &Path) -> Result<ExperimentConfig> {
    let bad = |message: String| CliError::Config {
        path: origin.to_path_buf(),
        message,
    };
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
    cfg.validate().map_err(bad)?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Usage("config path is empty".into()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let config = parse(&text, path)?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok(LoadedConfig {
        config,
        text,
        base_dir,
    })
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("experiment name is empty".into());
        }
        match (&self.data.path, &self.data.synth) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err("[data] needs exactly one of `path` or `synth`".into()),
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(format!("split ratio {} not in (0, 1)", self.split.ratio));
        }
        if self.classifiers.is_empty() {
            return Err("at least one classifier is required".into());
        }
        let mut names: Vec<&str> = self.classifiers.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err("classifier names must be unique".into());
        }
        for c in &self.classifiers {
            c.model.validate().map_err(|e| format!("classifier {:?}: {e}", c.name))?;
        }
        self.augment.validate().map_err(|e| e.to_string())?;
        if self.run.stages.is_empty() {
            return Err("[run] stages is empty".into());
        }
        if self.output.formats.is_empty() {
            return Err("[output] formats is empty".into());
        }
        Ok(())
    }

    /// Replaces the split and augmentation seeds.
    pub fn override_seed(&mut self, seed: u64) {
        self.split.seed = seed;
        self.augment.seed = seed;
    }
}
