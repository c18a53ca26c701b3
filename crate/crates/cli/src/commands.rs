use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lcml_core::augment::{run_pipeline, PipelineConfig};
use lcml_core::ingest::{class_counts, load_csv, write_csv};
use lcml_core::models::{codec, ClassifierConfig};
use lcml_core::LabeledDataset;

use crate::config::{self, Format, LoadedConfig, SynthSpec};
use crate::error::{CliError, Result};
use crate::experiment::{self, DataInfo, StageOutcome};
use crate::report::{write_reports, ArtifactWriter, Manifest};
use crate::sha256_hex;

fn require_path(p: &Path, what: &str) -> Result<()> {
    if p.as_os_str().is_empty() {
        return Err(CliError::Usage(format!("{what} path is empty")));
    }
    Ok(())
}

/// One-line summary of a dataset file.
pub fn validate(path: &Path) -> Result<String> {
    require_path(path, "dataset")?;
    let ds = load_csv(path)?;
    Ok(summary(&ds))
}

pub fn summary(ds: &LabeledDataset) -> String {
    format!(
        "{} rows × {} flux, {} positives",
        ds.len(),
        ds.width(),
        class_counts(ds).positives
    )
}

/// Generates a dataset and writes it as CSV; returns the file's SHA-256.
pub fn synth(spec: &SynthSpec, out: &Path) -> Result<String> {
    require_path(out, "output")?;
    let ds = experiment::synthesize(spec)?;
    let bytes = experiment::csv_bytes(&ds);
    std::fs::write(out, &bytes).map_err(|e| CliError::output(out, e))?;
    Ok(sha256_hex(&bytes))
}

/// Reads the `[augment]` table of a TOML file; experiment files work too.
pub fn load_pipeline(path: &Path) -> Result<PipelineConfig> {
    let bad = |message: String| CliError::Config {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    PipelineConfig::from_toml_str(&text).map_err(|e| bad(e.to_string()))
}

pub fn augment(dataset: &Path, pipeline: &PipelineConfig, out: &Path) -> Result<LabeledDataset> {
    require_path(dataset, "dataset")?;
    require_path(out, "output")?;
    pipeline.validate()?;
    let ds = load_csv(dataset)?;
    let augmented = run_pipeline(&ds, pipeline)?;
    write_csv(&augmented, out).map_err(|e| match e {
        lcml_core::Error::Io { path, source } => CliError::output(path, source),
        other => other.into(),
    })?;
    Ok(augmented)
}

/// `row,label,score` for every row of `dataset`.
pub fn predict(model_path: &Path, dataset: &Path) -> Result<String> {
    require_path(model_path, "model")?;
    require_path(dataset, "dataset")?;
    let model = codec::load(model_path)?;
    let ds = load_csv(dataset)?;
    if ds.width() != model.width() {
        return Err(lcml_core::Error::Validation(format!(
            "dataset has {} flux columns but the model expects {}",
            ds.width(),
            model.width()
        ))
        .into());
    }
    let labels = model.predict(ds.curves())?;
    let scores = model.predict_scores(ds.curves())?;
    let mut s = String::from("row,label,score\n");
    for (i, (l, p)) in labels.iter().zip(&scores).enumerate() {
        s.push_str(&format!("{i},{l},{p}\n"));
    }
    Ok(s)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub stages: Vec<StageOutcome>,
}

pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let mut loaded = config::load(config_path)?;
    if let Some(seed) = opts.seed {
        loaded.config.override_seed(seed);
    }
    if let Some(formats) = &opts.formats {
        if formats.is_empty() {
            return Err(CliError::Usage("no output formats selected".into()));
        }
        let mut f = formats.clone();
        f.sort_unstable();
        f.dedup();
        loaded.config.output.formats = f;
    }
    let out_dir = opts.out.clone().unwrap_or_else(|| loaded.output_dir());
    let mut writer = ArtifactWriter::new(&out_dir)?;
    let mut manifest = new_manifest(&loaded);

    let mut stages = Vec::new();
    let mut data = None;
    let result = execute(&loaded, &mut writer, &mut manifest, &mut stages, &mut data);

    manifest.data = data;
    manifest.artifacts = writer.artifacts().to_vec();
    if let Err(e) = &result {
        manifest.status = "failed";
        manifest.partial = true;
        manifest.error = Some(e.to_string());
    }
    manifest.seal();
    writer.write("manifest.json", manifest.to_json().as_bytes())?;
    result?;
    Ok(RunSummary {
        out_dir,
        manifest,
        stages,
    })
}

fn new_manifest(loaded: &LoadedConfig) -> Manifest {
    let c = &loaded.config;
    let mut seeds = BTreeMap::from([
        ("split".to_string(), c.split.seed),
        ("augment".to_string(), c.augment.seed),
    ]);
    if let Some(spec) = &c.data.synth {
        seeds.insert("synth".into(), spec.seed);
    }
    for cl in &c.classifiers {
        if let ClassifierConfig::RandomForest(f) = &cl.model {
            seeds.insert(format!("classifier.{}", cl.name), f.seed);
        }
    }
    Manifest {
        experiment: c.name.clone(),
        status: "complete",
        partial: false,
        error: None,
        config_sha256: sha256_hex(loaded.text.as_bytes()),
        data: None,
        seeds,
        mode: serde_json::to_value(c.augment.mode)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        stages: c.run.stages.iter().map(|s| s.as_str().to_string()).collect(),
        artifacts: Vec::new(),
        timings: BTreeMap::new(),
        digest: String::new(),
    }
}

fn execute(
    loaded: &LoadedConfig,
    writer: &mut ArtifactWriter,
    manifest: &mut Manifest,
    stages: &mut Vec<StageOutcome>,
    data: &mut Option<DataInfo>,
) -> Result<()> {
    let c = &loaded.config;
    let start = Instant::now();
    let (ds, info) = experiment::load_data(loaded)?;
    manifest.timings.insert("load".into(), start.elapsed().as_secs_f64());
    *data = Some(info);

    for &stage in &c.run.stages {
        let key = stage.as_str();
        let start = Instant::now();
        let outcome = experiment::run_stage(loaded, &ds, stage);
        manifest.timings.insert(format!("{key}.total"), start.elapsed().as_secs_f64());
        let outcome = outcome?;
        manifest.timings.insert(format!("{key}.prepare"), outcome.prepare_seconds);
        for m in &outcome.models {
            manifest.timings.insert(format!("{key}.fit.{}", m.name), m.fit_seconds);
        }
        stages.push(outcome);

        // reports are refreshed after every stage so a later failure still
        // leaves the finished stages on disk
        let start = Instant::now();
        let info = data.as_ref().expect("data loaded");
        write_reports(
            writer,
            &c.name,
            info,
            stages,
            &c.output.formats,
            c.output.literature,
            c.run.save_models,
        )?;
        *manifest.timings.entry("report".into()).or_default() += start.elapsed().as_secs_f64();
    }
    Ok(())
}
