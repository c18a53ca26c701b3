//! Box-transit light curves for fixtures and demos.
//!
//! `flux[i] = baseline * (1 - depth * in_transit(i))`, where sample `i` is in
//! transit iff `(i - phase) mod period < duration`. Optional Poisson photon
//! noise is drawn on the noiseless model as `Poisson(flux * scale) / scale`;
//! Gaussian noise `N(0, noise_sigma^2)` is added afterwards. Transits are
//! boxes: no limb darkening, no ingress.

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{LabeledDataset, LightCurve};
use crate::seed::{self, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitParams {
    pub baseline: f64,
    pub depth: f64,
    pub period: usize,
    pub duration: usize,
    pub noise_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson_scale: Option<f64>,
    #[serde(default)]
    pub phase: usize,
}

impl TransitParams {
    pub fn validate(&self, len: usize) -> Result<()> {
        if !(self.duration > 0 && self.duration < self.period && self.period <= len) {
            return Err(Error::config(format!(
                "need 0 < duration ({}) < period ({}) <= length ({len})",
                self.duration, self.period
            )));
        }
        if !(self.depth >= 0.0 && self.depth.is_finite()) {
            return Err(Error::config(format!("depth {} must be >= 0", self.depth)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma must be finite and >= 0"));
        }
        if !self.baseline.is_finite() {
            return Err(Error::config("baseline must be finite"));
        }
        if let Some(scale) = self.poisson_scale {
            if !(scale > 0.0 && scale.is_finite()) || !(self.baseline > 0.0) {
                return Err(Error::config(
                    "poisson noise needs a positive scale and a positive baseline",
                ));
            }
        }
        Ok(())
    }

    pub fn in_transit(&self, i: usize) -> bool {
        let offset = (i as i64 - self.phase as i64).rem_euclid(self.period as i64);
        (offset as usize) < self.duration
    }
}

pub fn generate_curve(p: &TransitParams, len: usize, seed: u64) -> Result<LightCurve> {
    p.validate(len)?;
    let mut rng = seed::rng_from_seed(seed);
    let gauss = Normal::new(0.0, p.noise_sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut flux = Vec::with_capacity(len);
    for i in 0..len {
        let dip = if p.in_transit(i) { p.depth } else { 0.0 };
        let mut v = p.baseline * (1.0 - dip);
        if let Some(scale) = p.poisson_scale {
            let lambda = v * scale;
            v = if lambda > 0.0 {
                let dist = Poisson::new(lambda).map_err(|e| Error::config(e.to_string()))?;
                dist.sample(&mut rng) / scale
            } else {
                0.0
            };
        }
        if p.noise_sigma > 0.0 {
            v += gauss.sample(&mut rng);
        }
        flux.push(v);
    }
    LightCurve::new(flux)
}

/// Inclusive bounds for drawing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T: Copy> Range<T> {
    pub fn fixed(v: T) -> Self {
        Range { min: v, max: v }
    }
}

impl Range<f64> {
    fn draw(&self, rng: &mut seed::Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }
}

impl Range<usize> {
    fn draw(&self, rng: &mut seed::Rng) -> usize {
        if self.max > self.min {
            rng.random_range(self.min as u64..=self.max as u64) as usize
        } else {
            self.min
        }
    }
}

/// Ranges for positive-curve parameters. Negatives share baseline, noise and
/// Poisson settings but have zero depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitRanges {
    pub baseline: Range<f64>,
    pub depth: Range<f64>,
    pub period: Range<usize>,
    pub duration: Range<usize>,
    pub noise_sigma: Range<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson_scale: Option<f64>,
}

impl Default for TransitRanges {
    fn default() -> Self {
        TransitRanges {
            baseline: Range { min: 0.5, max: 2.0 },
            depth: Range { min: 0.005, max: 0.03 },
            period: Range { min: 150, max: 900 },
            duration: Range { min: 8, max: 40 },
            noise_sigma: Range { min: 0.001, max: 0.004 },
            poisson_scale: None,
        }
    }
}

impl TransitRanges {
    pub fn validate(&self, len: usize) -> Result<()> {
        let ordered = self.baseline.min <= self.baseline.max
            && self.depth.min <= self.depth.max
            && self.period.min <= self.period.max
            && self.duration.min <= self.duration.max
            && self.noise_sigma.min <= self.noise_sigma.max;
        if !ordered {
            return Err(Error::config("every range needs min <= max"));
        }
        if self.duration.min == 0 || self.duration.max >= self.period.min {
            return Err(Error::config("durations must be positive and shorter than every period"));
        }
        if self.period.min > len / 2 {
            return Err(Error::config(format!(
                "periods must allow two transits in {len} samples"
            )));
        }
        if self.depth.min < 0.0 || self.noise_sigma.min < 0.0 {
            return Err(Error::config("depth and noise must be non-negative"));
        }
        Ok(())
    }

    /// Periods are capped at `len / 2` and the phase drawn below the period,
    /// so every positive curve holds at least one full transit window.
    fn draw_positive(&self, len: usize, rng: &mut seed::Rng) -> TransitParams {
        let period = self.period.draw(rng).min(len / 2).max(self.duration.max + 1);
        let duration = self.duration.draw(rng).min(period - 1);
        TransitParams {
            baseline: self.baseline.draw(rng),
            depth: self.depth.draw(rng),
            period,
            duration,
            noise_sigma: self.noise_sigma.draw(rng),
            poisson_scale: self.poisson_scale,
            phase: rng.random_range(0..period as u64) as usize,
        }
    }

    fn draw_negative(&self, len: usize, rng: &mut seed::Rng) -> TransitParams {
        let period = len.max(2);
        TransitParams {
            baseline: self.baseline.draw(rng),
            depth: 0.0,
            period,
            duration: 1,
            noise_sigma: self.noise_sigma.draw(rng),
            poisson_scale: self.poisson_scale,
            phase: 0,
        }
    }
}

/// A generated dataset together with the parameters behind each row.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub dataset: LabeledDataset,
    pub params: Vec<TransitParams>,
}

pub fn generate_dataset(
    n_pos: usize,
    n_neg: usize,
    ranges: &TransitRanges,
    len: usize,
    seed: u64,
) -> Result<SynthDataset> {
    if n_pos + n_neg == 0 {
        return Err(Error::config("synthetic dataset needs at least one row"));
    }
    if len < 2 {
        return Err(Error::config("synthetic curves need at least 2 samples"));
    }
    if n_pos > 0 {
        ranges.validate(len)?;
    }
    let mut order: Vec<usize> = (0..n_pos + n_neg).collect();
    seed::shuffle(&mut order, &mut seed::substream(seed, &[u64::MAX]));

    let rows = order
        .par_iter()
        .map(|&source| {
            let positive = source < n_pos;
            let mut rng = seed::substream(seed, &[source as u64, 0]);
            let params = if positive {
                ranges.draw_positive(len, &mut rng)
            } else {
                ranges.draw_negative(len, &mut rng)
            };
            let curve = generate_curve(&params, len, derive_seed(seed, &[source as u64, 1]))?;
            Ok((curve, u8::from(positive), params))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut params = Vec::with_capacity(rows.len());
    for (c, l, p) in rows {
        curves.push(c);
        labels.push(l);
        params.push(p);
    }
    Ok(SynthDataset {
        dataset: LabeledDataset::new(curves, labels)?,
        params,
    })
}
