use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{class_counts, LabeledDataset, LightCurve};
use crate::seed::derive_seed;

use super::{fourier_perturb, minmax_normalize, robust_scale, savgol, smote};

/// Whether augmentation runs before the train/test split (reproducing the
/// original experiment, synthetic positives leak into the test set) or on the
/// training partition only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    PaperFidelity,
    #[default]
    LeakFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Savgol {
        #[serde(default = "defaults::window")]
        window: usize,
        #[serde(default = "defaults::polyorder")]
        polyorder: usize,
    },
    Minmax,
    RobustScale,
    FourierPerturb {
        #[serde(default = "defaults::amp_sigma")]
        amp_sigma: f64,
        #[serde(default = "defaults::phase_sigma")]
        phase_sigma: f64,
        #[serde(default = "defaults::copies")]
        copies: usize,
    },
    Smote {
        #[serde(default = "defaults::k_neighbors")]
        k_neighbors: usize,
        #[serde(default = "defaults::target_ratio")]
        target_ratio: f64,
    },
}

mod defaults {
    pub fn window() -> usize {
        11
    }
    pub fn polyorder() -> usize {
        3
    }
    pub fn amp_sigma() -> f64 {
        0.02
    }
    pub fn phase_sigma() -> f64 {
        0.05
    }
    pub fn copies() -> usize {
        1
    }
    pub fn k_neighbors() -> usize {
        5
    }
    pub fn target_ratio() -> f64 {
        1.0
    }
}

impl Step {
    pub fn savgol() -> Step {
        Step::Savgol {
            window: defaults::window(),
            polyorder: defaults::polyorder(),
        }
    }

    pub fn fourier_perturb() -> Step {
        Step::FourierPerturb {
            amp_sigma: defaults::amp_sigma(),
            phase_sigma: defaults::phase_sigma(),
            copies: defaults::copies(),
        }
    }

    pub fn smote() -> Step {
        Step::Smote {
            k_neighbors: defaults::k_neighbors(),
            target_ratio: defaults::target_ratio(),
        }
    }

    /// Steps that rewrite each curve in place, as opposed to adding rows.
    pub fn is_per_curve(&self) -> bool {
        matches!(self, Step::Savgol { .. } | Step::Minmax | Step::RobustScale)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Step::Savgol { window, polyorder } => {
                if window % 2 == 0 || window <= polyorder {
                    return Err(Error::config(format!(
                        "savgol needs an odd window greater than polyorder, got window={window} polyorder={polyorder}"
                    )));
                }
            }
            Step::FourierPerturb {
                amp_sigma,
                phase_sigma,
                ..
            } => {
                if !(amp_sigma >= 0.0 && amp_sigma.is_finite())
                    || !(phase_sigma >= 0.0 && phase_sigma.is_finite())
                {
                    return Err(Error::config(
                        "fourier_perturb sigmas must be finite and non-negative",
                    ));
                }
            }
            Step::Smote {
                k_neighbors,
                target_ratio,
            } => {
                if k_neighbors == 0 {
                    return Err(Error::config("smote k_neighbors must be at least 1"));
                }
                if !(target_ratio > 0.0 && target_ratio <= 1.0) {
                    return Err(Error::config(format!(
                        "smote target_ratio {target_ratio} not in (0, 1]"
                    )));
                }
            }
            Step::Minmax | Step::RobustScale => {}
        }
        Ok(())
    }

    fn apply_to_curve(&self, curve: &LightCurve) -> Result<LightCurve> {
        let out = match *self {
            Step::Savgol { window, polyorder } => savgol::savgol_filter(curve, window, polyorder)?,
            Step::Minmax => minmax_normalize(curve),
            Step::RobustScale => robust_scale(curve),
            _ => unreachable!("not a per-curve step"),
        };
        Ok(LightCurve::from_vec_unchecked(out))
    }
}

/// Ordered augmentation steps plus the root seed. In TOML this is the
/// `[augment]` table with one `[[augment.steps]]` entry per step, each tagged
/// by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: AugmentMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            steps: Vec::new(),
            seed: 0,
            mode: AugmentMode::LeakFree,
        }
    }
}

impl PipelineConfig {
    /// savgol -> robust_scale -> minmax -> fourier_perturb -> smote.
    pub fn default_steps() -> Vec<Step> {
        vec![
            Step::savgol(),
            Step::RobustScale,
            Step::Minmax,
            Step::fourier_perturb(),
            Step::smote(),
        ]
    }

    pub fn paper_fidelity(seed: u64) -> Self {
        PipelineConfig {
            steps: Self::default_steps(),
            seed,
            mode: AugmentMode::PaperFidelity,
        }
    }

    pub fn leak_free(seed: u64) -> Self {
        PipelineConfig {
            steps: Self::default_steps(),
            seed,
            mode: AugmentMode::LeakFree,
        }
    }

    /// Reads the `[augment]` table of a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            augment: PipelineConfig,
        }
        let doc: Doc = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        doc.augment.validate()?;
        Ok(doc.augment)
    }

    pub fn validate(&self) -> Result<()> {
        for step in &self.steps {
            step.validate()?;
        }
        let smote_at: Vec<usize> = self
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Step::Smote { .. }))
            .map(|(i, _)| i)
            .collect();
        match smote_at.as_slice() {
            [] => Ok(()),
            [i] if *i + 1 == self.steps.len() => Ok(()),
            [_] => Err(Error::config("smote must be the last augmentation step")),
            _ => Err(Error::config("at most one smote step is allowed")),
        }
    }

    pub(crate) fn step_seed(&self, step_index: usize) -> u64 {
        derive_seed(self.seed, &[step_index as u64])
    }
}

/// Applies every step in order. Per-curve steps rewrite all rows; fourier
/// jitter appends `copies` perturbed duplicates of each positive row; SMOTE
/// appends synthetic positives until `positives = round(target_ratio * negatives)`.
pub fn run_pipeline(ds: &LabeledDataset, cfg: &PipelineConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut current = ds.clone();
    for (index, step) in cfg.steps.iter().enumerate() {
        let step_seed = cfg.step_seed(index);
        current = match *step {
            Step::Savgol { .. } | Step::Minmax | Step::RobustScale => {
                current.map_curves(|c| step.apply_to_curve(c))?
            }
            Step::FourierPerturb {
                amp_sigma,
                phase_sigma,
                copies,
            } => append_fourier_copies(current, amp_sigma, phase_sigma, copies, step_seed)?,
            Step::Smote {
                k_neighbors,
                target_ratio,
            } => append_smote(current, k_neighbors, target_ratio, step_seed)?,
        };
    }
    Ok(current)
}

/// Applies only the per-curve steps. Used for held-out rows, which must see
/// the same feature transforms as training rows but receive no synthetic
/// samples.
pub fn transform_only(ds: &LabeledDataset, cfg: &PipelineConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut current = ds.clone();
    for step in cfg.steps.iter().filter(|s| s.is_per_curve()) {
        current = current.map_curves(|c| step.apply_to_curve(c))?;
    }
    Ok(current)
}

fn append_fourier_copies(
    ds: LabeledDataset,
    amp_sigma: f64,
    phase_sigma: f64,
    copies: usize,
    step_seed: u64,
) -> Result<LabeledDataset> {
    use rayon::prelude::*;
    let jobs: Vec<(usize, usize)> = ds
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 1)
        .flat_map(|(row, _)| (0..copies).map(move |c| (row, c)))
        .collect();
    let curves = jobs
        .par_iter()
        .map(|&(row, copy)| {
            let seed = derive_seed(step_seed, &[row as u64, copy as u64]);
            fourier_perturb(&ds.curves()[row], amp_sigma, phase_sigma, seed)
                .map(LightCurve::from_vec_unchecked)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = vec![1; curves.len()];
    ds.extended(curves, labels)
}

fn append_smote(
    ds: LabeledDataset,
    k_neighbors: usize,
    target_ratio: f64,
    step_seed: u64,
) -> Result<LabeledDataset> {
    let counts = class_counts(&ds);
    let target = (target_ratio * counts.negatives as f64).round() as u64;
    let n_synthetic = target.saturating_sub(counts.positives) as usize;
    if n_synthetic == 0 {
        return Ok(ds);
    }
    let minority: Vec<&LightCurve> = ds
        .curves()
        .iter()
        .zip(ds.labels())
        .filter(|(_, &l)| l == 1)
        .map(|(c, _)| c)
        .collect();
    let samples = smote::smote(&minority, k_neighbors, n_synthetic, step_seed)?;
    let curves = samples.into_iter().map(LightCurve::from_vec_unchecked).collect();
    ds.extended(curves, vec![1; n_synthetic])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ClassCounts;

    fn toy(n_pos: usize, n_neg: usize, width: usize) -> LabeledDataset {
        let curves = (0..n_pos + n_neg)
            .map(|i| {
                LightCurve::new(
                    (0..width)
                        .map(|j| ((i * 31 + j * 17) % 23) as f64 + if i < n_pos { 0.0 } else { 5.0 })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let labels = (0..n_pos + n_neg).map(|i| u8::from(i < n_pos)).collect();
        LabeledDataset::new(curves, labels).unwrap()
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let ds = toy(3, 7, 16);
        let out = run_pipeline(&ds, &PipelineConfig::default()).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn default_pipeline_balances_classes() {
        let ds = toy(37, 5050, 24);
        let out = run_pipeline(&ds, &PipelineConfig::paper_fidelity(1)).unwrap();
        assert_eq!(out.len(), 10100);
        assert_eq!(
            class_counts(&out),
            ClassCounts {
                negatives: 5050,
                positives: 5050
            }
        );
        // original rows went through minmax last; jittered and synthetic rows need not
        assert!(out.curves()[..5087].iter().flat_map(|c| c.iter()).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn partial_target_ratio() {
        let ds = toy(4, 100, 12);
        let cfg = PipelineConfig {
            steps: vec![Step::Smote {
                k_neighbors: 2,
                target_ratio: 0.5,
            }],
            ..Default::default()
        };
        let out = run_pipeline(&ds, &cfg).unwrap();
        assert_eq!(class_counts(&out).positives, 50);
    }

    #[test]
    fn fourier_step_duplicates_only_positives() {
        let ds = toy(3, 5, 16);
        let cfg = PipelineConfig {
            steps: vec![Step::FourierPerturb {
                amp_sigma: 0.1,
                phase_sigma: 0.1,
                copies: 2,
            }],
            ..Default::default()
        };
        let out = run_pipeline(&ds, &cfg).unwrap();
        assert_eq!(class_counts(&out), ClassCounts { negatives: 5, positives: 9 });
        assert_eq!(&out.curves()[..8], ds.curves());
    }

    #[test]
    fn reruns_are_identical() {
        let ds = toy(6, 40, 32);
        let cfg = PipelineConfig::leak_free(99);
        assert_eq!(run_pipeline(&ds, &cfg).unwrap(), run_pipeline(&ds, &cfg).unwrap());
    }

    #[test]
    fn transform_only_skips_row_generation() {
        let ds = toy(2, 6, 32);
        let out = transform_only(&ds, &PipelineConfig::leak_free(0)).unwrap();
        assert_eq!(out.len(), ds.len());
        assert_eq!(out.labels(), ds.labels());
    }

    #[test]
    fn validation_rules() {
        let bad = [
            vec![Step::Savgol { window: 4, polyorder: 1 }],
            vec![Step::Savgol { window: 3, polyorder: 3 }],
            vec![Step::smote(), Step::Minmax],
            vec![Step::smote(), Step::smote()],
            vec![Step::Smote { k_neighbors: 0, target_ratio: 1.0 }],
            vec![Step::Smote { k_neighbors: 5, target_ratio: 1.5 }],
            vec![Step::FourierPerturb { amp_sigma: -1.0, phase_sigma: 0.0, copies: 1 }],
        ];
        for steps in bad {
            let cfg = PipelineConfig { steps: steps.clone(), ..Default::default() };
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{steps:?}");
        }
        PipelineConfig::paper_fidelity(0).validate().unwrap();
    }

    #[test]
    fn toml_section_preserves_order() {
        let text = r#"
            [augment]
            seed = 42
            mode = "paper_fidelity"

            [[augment.steps]]
            kind = "minmax"

            [[augment.steps]]
            kind = "savgol"
            window = 7

            [[augment.steps]]
            kind = "robust_scale"

            [[augment.steps]]
            kind = "smote"
            k_neighbors = 3
        "#;
        let cfg = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.mode, AugmentMode::PaperFidelity);
        assert_eq!(
            cfg.steps,
            vec![
                Step::Minmax,
                Step::Savgol { window: 7, polyorder: 3 },
                Step::RobustScale,
                Step::Smote { k_neighbors: 3, target_ratio: 1.0 },
            ]
        );
        let round = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&round).unwrap();
        assert_eq!(back, cfg);
    }
}
