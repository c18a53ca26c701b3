//! Report artifacts and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lcml_core::eval::{compare_table, ConfusionMatrix, MetricsReport};
use lcml_core::models::codec;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;
use crate::error::{CliError, Result};
use crate::experiment::{DataInfo, PartitionCounts, StageOutcome};
use crate::sha256_hex;

/// File-system friendly form of a classifier name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes files under one directory and remembers what it wrote.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
        Ok(ArtifactWriter {
            dir,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.written
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::output(&path, e))?;
        self.written.retain(|a| a.path != rel);
        self.written.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct ModelEntry<'a> {
    name: &'a str,
    display_name: &'a str,
    model: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    confusion: &'a ConfusionMatrix,
    metrics: &'a MetricsReport,
}

#[derive(Debug, Serialize)]
struct StageEntry<'a> {
    stage: &'a str,
    train: PartitionCounts,
    test: PartitionCounts,
    results: Vec<ModelEntry<'a>>,
}

/// Everything in `metrics.json`. Floats are printed at full precision and
/// nothing time-dependent is included, so identical inputs give identical bytes.
pub fn metrics_json(experiment: &str, data: &DataInfo, stages: &[StageOutcome]) -> String {
    let stages: Vec<StageEntry> = stages
        .iter()
        .map(|s| StageEntry {
            stage: s.stage.as_str(),
            train: s.train,
            test: s.test,
            results: s
                .models
                .iter()
                .map(|m| ModelEntry {
                    name: &m.name,
                    display_name: &m.display_name,
                    model: m.kind,
                    converged: m.converged(),
                    confusion: &m.confusion,
                    metrics: &m.metrics,
                })
                .collect(),
        })
        .collect();
    let doc = json!({
        "experiment": experiment,
        "data": { "rows": data.rows, "width": data.width, "positives": data.positives, "sha256": data.sha256 },
        "stages": stages,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn metrics_csv(stages: &[StageOutcome]) -> String {
    let mut s = String::from("stage,name,model,tp,fp,fn,tn,accuracy,precision,recall,f1\n");
    for st in stages {
        for m in &st.models {
            let c = &m.confusion;
            let r = &m.metrics;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                st.stage.as_str(),
                csv_cell(&m.name),
                m.kind,
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                r.accuracy,
                r.precision,
                r.recall,
                r.f1
            ));
        }
    }
    s
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

/// Writes the per-model and summary reports for finished stages.
pub fn write_reports(
    out: &mut ArtifactWriter,
    experiment: &str,
    data: &DataInfo,
    stages: &[StageOutcome],
    formats: &[Format],
    literature: bool,
    save_models: bool,
) -> Result<()> {
    for st in stages {
        for m in &st.models {
            let stem = format!("{}-{}", st.stage.as_str(), slug(&m.name));
            out.write(&format!("confusion/{stem}.txt"), m.confusion.render_grid().as_bytes())?;
            if formats.contains(&Format::Svg) {
                let svg = m.confusion.render_svg(&m.display_name);
                out.write(&format!("confusion/{stem}.svg"), svg.as_bytes())?;
            }
            if save_models {
                out.write(&format!("models/{stem}.lcm"), &codec::encode(&m.model))?;
            }
        }
    }
    if formats.contains(&Format::Json) {
        out.write("metrics.json", metrics_json(experiment, data, stages).as_bytes())?;
    }
    let rows: Vec<(String, _)> = stages
        .iter()
        .flat_map(|s| s.models.iter().map(|m| (m.display_name.clone(), m.metrics)))
        .collect();
    if rows.is_empty() {
        return Ok(());
    }
    let table = compare_table(&rows, literature)?;
    if formats.contains(&Format::Csv) {
        out.write("metrics.csv", metrics_csv(stages).as_bytes())?;
        out.write("table.csv", table.to_csv().as_bytes())?;
    }
    if formats.contains(&Format::Md) {
        out.write("table.md", table.to_markdown().as_bytes())?;
    }
    Ok(())
}

/// Run record. `timings` is left out of `digest`, which therefore depends
/// only on the config and the input data.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub status: &'static str,
    /// Set when the run stopped early; the listed artifacts are then partial.
    pub partial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataInfo>,
    pub seeds: BTreeMap<String, u64>,
    pub mode: String,
    pub stages: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub timings: BTreeMap<String, f64>,
    pub digest: String,
}

impl Manifest {
    /// SHA-256 over the manifest JSON with `timings` and `digest` removed.
    pub fn compute_digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serialize");
        if let Value::Object(map) = &mut v {
            map.remove("timings");
            map.remove("digest");
        }
        sha256_hex(serde_json::to_string(&v).expect("manifest serialize").as_bytes())
    }

    pub fn seal(&mut self) {
        self.digest = self.compute_digest();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_path_safe() {
        assert_eq!(slug("Augmented LR"), "augmented_lr");
        assert_eq!(slug("RF (250)"), "rf__250");
        assert_eq!(slug("knn-4"), "knn_4");
    }

    #[test]
    fn digest_ignores_timings() {
        let mut m = Manifest {
            experiment: "x".into(),
            status: "complete",
            partial: false,
            error: None,
            config_sha256: "00".into(),
            data: None,
            seeds: BTreeMap::from([("split".into(), 1)]),
            mode: "leak_free".into(),
            stages: vec!["pre".into()],
            artifacts: vec![],
            timings: BTreeMap::from([("load".into(), 0.5)]),
            digest: String::new(),
        };
        m.seal();
        let first = m.digest.clone();
        m.timings.insert("load".into(), 9.0);
        assert_eq!(m.compute_digest(), first);
        m.seeds.insert("split".into(), 2);
        assert_ne!(m.compute_digest(), first);
    }

    #[test]
    fn writer_records_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path().join("o")).unwrap();
        w.write("a/b.txt", b"abc").unwrap();
        w.write("a/b.txt", b"abc").unwrap();
        assert_eq!(w.artifacts().len(), 1);
        assert_eq!(
            w.artifacts()[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(std::fs::read(dir.path().join("o/a/b.txt")).unwrap(), b"abc");
    }
}
