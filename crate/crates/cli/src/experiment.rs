//! Loading data, running stages and collecting per-model outcomes.

use std::time::Instant;

use lcml_core::augment::{run_pipeline, transform_only, AugmentMode};
use lcml_core::eval::{confusion, metrics, ConfusionMatrix, MetricsReport};
use lcml_core::ingest::{class_counts, read_csv, split, write_csv_to};
use lcml_core::models::TrainedModel;
use lcml_core::synth::generate_dataset;
use lcml_core::{ClassCounts, LabeledDataset};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LoadedConfig, NamedClassifier, Stage, SynthSpec};
use crate::error::{CliError, Result};
use crate::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataInfo {
    pub source: &'static str,
    /// The path as written in the config.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    /// SHA-256 of the file bytes, or of the generated dataset written as CSV.
    pub sha256: String,
    pub rows: usize,
    pub width: usize,
    pub positives: u64,
}

pub fn synthesize(spec: &SynthSpec) -> Result<LabeledDataset> {
    Ok(generate_dataset(spec.positives, spec.negatives, &spec.ranges, spec.length, spec.seed)?.dataset)
}

pub fn csv_bytes(ds: &LabeledDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv_to(ds, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn load_data(cfg: &LoadedConfig) -> Result<(LabeledDataset, DataInfo)> {
    let data = &cfg.config.data;
    let (ds, sha256) = match (cfg.data_path(), &data.synth) {
        (Some(path), _) => {
            let bytes = std::fs::read(&path).map_err(|e| lcml_core::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            (read_csv(bytes.as_slice())?, sha256_hex(&bytes))
        }
        (None, Some(spec)) => {
            let ds = synthesize(spec)?;
            let digest = sha256_hex(&csv_bytes(&ds));
            (ds, digest)
        }
        (None, None) => unreachable!("validated config has a data source"),
    };
    let info = DataInfo {
        source: if data.path.is_some() { "csv" } else { "synth" },
        path: data.path.as_ref().map(|p| p.display().to_string()),
        synth: data.synth.clone(),
        sha256,
        rows: ds.len(),
        width: ds.width(),
        positives: class_counts(&ds).positives,
    };
    Ok((ds, info))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionCounts {
    pub rows: u64,
    pub positives: u64,
    pub negatives: u64,
}

impl From<ClassCounts> for PartitionCounts {
    fn from(c: ClassCounts) -> Self {
        PartitionCounts {
            rows: c.total(),
            positives: c.positives,
            negatives: c.negatives,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelOutcome {
    pub name: String,
    /// Row label in the comparison table.
    pub display_name: String,
    pub kind: &'static str,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub model: TrainedModel,
    pub fit_seconds: f64,
}

impl ModelOutcome {
    pub fn converged(&self) -> Option<bool> {
        match &self.model {
            TrainedModel::LogReg(m) => Some(m.converged),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: Stage,
    pub train: PartitionCounts,
    pub test: PartitionCounts,
    pub models: Vec<ModelOutcome>,
    pub prepare_seconds: f64,
}

pub fn display_name(stage: Stage, name: &str) -> String {
    match stage {
        Stage::Pre => name.to_string(),
        Stage::Post => format!("Augmented {name}"),
    }
}

/// Train/test partitions for one stage.
pub fn prepare(cfg: &LoadedConfig, ds: &LabeledDataset, stage: Stage) -> Result<(LabeledDataset, LabeledDataset)> {
    let c = &cfg.config;
    let (ratio, seed) = (c.split.ratio, c.split.seed);
    Ok(match stage {
        Stage::Pre => {
            let (train, test, _) = split(ds, ratio, seed)?;
            (train, test)
        }
        Stage::Post => match c.augment.mode {
            AugmentMode::PaperFidelity => {
                let augmented = run_pipeline(ds, &c.augment)?;
                let (train, test, _) = split(&augmented, ratio, seed)?;
                (train, test)
            }
            AugmentMode::LeakFree => {
                let (train, test, _) = split(ds, ratio, seed)?;
                (run_pipeline(&train, &c.augment)?, transform_only(&test, &c.augment)?)
            }
        },
    })
}

pub fn fit_and_score(
    classifier: &NamedClassifier,
    stage: Stage,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<ModelOutcome> {
    let start = Instant::now();
    let model = classifier.model.fit(train.curves(), train.labels())?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let predicted = model.predict(test.curves())?;
    let cm = confusion(test.labels(), &predicted)?;
    Ok(ModelOutcome {
        name: classifier.name.clone(),
        display_name: display_name(stage, &classifier.name),
        kind: classifier.model.kind(),
        confusion: cm,
        metrics: metrics(&cm)?,
        model,
        fit_seconds,
    })
}

pub fn run_stage(cfg: &LoadedConfig, ds: &LabeledDataset, stage: Stage) -> Result<StageOutcome> {
    let start = Instant::now();
    let (train, test) = prepare(cfg, ds, stage)?;
    if test.is_empty() {
        return Err(CliError::Core(lcml_core::Error::Validation(format!(
            "{} stage has an empty test partition",
            stage.as_str()
        ))));
    }
    let prepare_seconds = start.elapsed().as_secs_f64();
    // independent fits over shared read-only partitions; results keep config order
    let models = cfg
        .config
        .classifiers
        .par_iter()
        .map(|c| fit_and_score(c, stage, &train, &test))
        .collect::<Result<Vec<_>>>()?;
    Ok(StageOutcome {
        stage,
        train: class_counts(&train).into(),
        test: class_counts(&test).into(),
        models,
        prepare_seconds,
    })
}
