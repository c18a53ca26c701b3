//! L2-regularised logistic regression fitted by full-batch gradient descent.
//!
//! Objective: `mean_i [softplus(z_i) - y_i z_i] + (lambda / 2) |w|^2` with
//! `z_i = w . x_i + b`; the bias is not penalised. Row sums are accumulated in
//! fixed-size chunks whose partial results are combined in chunk order, so the
//! fitted weights do not depend on the rayon thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training, check_width, sigmoid};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    /// Armijo backtracking: shrink the step until
    /// `loss(new) <= loss - armijo * step * |grad|^2`. The accepted step is
    /// grown by `1 / shrink` before the next iteration.
    Backtracking {
        #[serde(default = "default_initial_step")]
        initial_step: f64,
        #[serde(default = "default_shrink")]
        shrink: f64,
        #[serde(default = "default_armijo")]
        armijo: f64,
    },
    Fixed { step: f64 },
}

fn default_initial_step() -> f64 {
    1.0
}
fn default_shrink() -> f64 {
    0.5
}
fn default_armijo() -> f64 {
    1e-4
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            initial_step: default_initial_step(),
            shrink: default_shrink(),
            armijo: default_armijo(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegConfig {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// `None` means `1 / n_train`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_lambda: Option<f64>,
    #[serde(default)]
    pub step_rule: StepRule,
}

fn default_max_iter() -> usize {
    1000
}
fn default_tol() -> f64 {
    1e-6
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            max_iter: default_max_iter(),
            tol: default_tol(),
            l2_lambda: None,
            step_rule: StepRule::default(),
        }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::config("logreg max_iter must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::config("logreg tol must be non-negative"));
        }
        if let Some(l) = self.l2_lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::config(format!("logreg l2_lambda {l} must be >= 0")));
            }
        }
        match self.step_rule {
            StepRule::Backtracking {
                initial_step,
                shrink,
                armijo,
            } => {
                if !(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0) || !(armijo > 0.0 && armijo < 1.0) {
                    return Err(Error::config("invalid backtracking parameters"));
                }
            }
            StepRule::Fixed { step } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(Error::config("fixed step must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iters_used: usize,
}

impl LogRegModel {
    pub fn decision<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<f64>> {
        check_width(x, self.weights.len())?;
        Ok(margins(x, &self.weights, self.bias))
    }

    pub fn predict_proba<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<f64>> {
        Ok(self.decision(x)?.into_iter().map(sigmoid).collect())
    }

    /// Label 1 iff probability >= 0.5.
    pub fn predict<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn margins<R: AsRef<[f64]> + Sync>(x: &[R], w: &[f64], b: f64) -> Vec<f64> {
    x.par_iter().map(|row| dot(row.as_ref(), w) + b).collect()
}

fn loss_from_margins(z: &[f64], y: &[u8], w: &[f64], lambda: f64) -> f64 {
    let partial: Vec<f64> = z
        .par_chunks(CHUNK)
        .zip(y.par_chunks(CHUNK))
        .map(|(zc, yc)| {
            zc.iter()
                .zip(yc)
                .map(|(&zi, &yi)| softplus(zi) - f64::from(yi) * zi)
                .sum::<f64>()
        })
        .collect();
    let data: f64 = partial.iter().sum::<f64>() / z.len() as f64;
    data + 0.5 * lambda * dot(w, w)
}

fn gradient_from_margins<R: AsRef<[f64]> + Sync>(
    x: &[R],
    z: &[f64],
    y: &[u8],
    w: &[f64],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let width = w.len();
    let partial: Vec<(Vec<f64>, f64)> = x
        .par_chunks(CHUNK)
        .zip(z.par_chunks(CHUNK))
        .zip(y.par_chunks(CHUNK))
        .map(|((xc, zc), yc)| {
            let mut g = vec![0.0; width];
            let mut gb = 0.0;
            for ((row, &zi), &yi) in xc.iter().zip(zc).zip(yc) {
                let r = sigmoid(zi) - f64::from(yi);
                axpy(r, row.as_ref(), &mut g);
                gb += r;
            }
            (g, gb)
        })
        .collect();
    let n = z.len() as f64;
    let mut gw = vec![0.0; width];
    let mut gb = 0.0;
    for (g, b) in &partial {
        axpy(1.0, g, &mut gw);
        gb += b;
    }
    for (gi, wi) in gw.iter_mut().zip(w) {
        *gi = *gi / n + lambda * wi;
    }
    (gw, gb / n)
}

/// Regularised mean logistic loss at `(w, b)`.
pub fn logistic_loss<R: AsRef<[f64]> + Sync>(x: &[R], y: &[u8], w: &[f64], b: f64, lambda: f64) -> f64 {
    loss_from_margins(&margins(x, w, b), y, w, lambda)
}

/// Loss and its analytic gradient `(loss, d/dw, d/db)`.
pub fn loss_gradient<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[u8],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let z = margins(x, w, b);
    let loss = loss_from_margins(&z, y, w, lambda);
    let (gw, gb) = gradient_from_margins(x, &z, y, w, lambda);
    (loss, gw, gb)
}

pub fn logreg_fit<R: AsRef<[f64]> + Sync>(x: &[R], y: &[u8], cfg: &LogRegConfig) -> Result<LogRegModel> {
    logreg_fit_traced(x, y, cfg).map(|(m, _)| m)
}

fn non_finite(iteration: usize, what: &str) -> Error {
    Error::Numeric {
        iteration,
        what: what.to_string(),
    }
}

/// Like [`logreg_fit`], also returning the loss at the starting point and
/// after every accepted step.
pub fn logreg_fit_traced<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[u8],
    cfg: &LogRegConfig,
) -> Result<(LogRegModel, Vec<f64>)> {
    cfg.validate()?;
    let width = check_training(x, y)?;
    let lambda = cfg.l2_lambda.unwrap_or(1.0 / x.len() as f64);

    let mut w = vec![0.0; width];
    let mut b = 0.0;
    let mut z = margins(x, &w, b);
    let mut loss = loss_from_margins(&z, y, &w, lambda);
    let mut losses = vec![loss];
    let mut converged = false;
    let mut iters_used = 0;
    let mut step = match cfg.step_rule {
        StepRule::Backtracking { initial_step, .. } => initial_step,
        StepRule::Fixed { step } => step,
    };

    for iter in 0..cfg.max_iter {
        if !loss.is_finite() {
            return Err(non_finite(iter, "loss is not finite"));
        }
        let (gw, gb) = gradient_from_margins(x, &z, y, &w, lambda);
        let g_inf = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if !g_inf.is_finite() {
            return Err(non_finite(iter, "gradient is not finite"));
        }
        if g_inf <= cfg.tol {
            converged = true;
            break;
        }
        let g_sq = dot(&gw, &gw) + gb * gb;

        let accepted = match cfg.step_rule {
            StepRule::Fixed { step } => {
                let (tw, tb) = (take_step(&w, &gw, step), b - step * gb);
                let tz = margins(x, &tw, tb);
                let tl = loss_from_margins(&tz, y, &tw, lambda);
                Some((tw, tb, tz, tl))
            }
            StepRule::Backtracking { shrink, armijo, .. } => {
                let mut t = step;
                let mut found = None;
                // margins move linearly along the step, so one pass over the
                // rows serves every trial
                let dz = margins(x, &gw, gb);
                // 1100 halvings take any finite step below the smallest subnormal
                for _ in 0..1100 {
                    let (tw, tb) = (take_step(&w, &gw, t), b - t * gb);
                    let tz: Vec<f64> = z.iter().zip(&dz).map(|(zi, di)| zi - t * di).collect();
                    let tl = loss_from_margins(&tz, y, &tw, lambda);
                    if tl.is_nan() {
                        return Err(non_finite(iter, "trial loss is NaN"));
                    }
                    if tl <= loss - armijo * t * g_sq {
                        found = Some((tw, tb, tz, tl));
                        break;
                    }
                    t *= shrink;
                    if t == 0.0 {
                        break;
                    }
                }
                step = t / shrink;
                found
            }
        };

        match accepted {
            Some((tw, tb, tz, tl)) => {
                w = tw;
                b = tb;
                z = tz;
                loss = tl;
                losses.push(loss);
                iters_used = iter + 1;
            }
            // no representable step decreases the loss: stationary to
            // working precision
            None => break,
        }
    }
    if !loss.is_finite() {
        return Err(non_finite(iters_used, "loss is not finite"));
    }
    Ok((
        LogRegModel {
            weights: w,
            bias: b,
            converged,
            iters_used,
        },
        losses,
    ))
}

fn take_step(w: &[f64], g: &[f64], t: f64) -> Vec<f64> {
    w.iter().zip(g).map(|(wi, gi)| wi - t * gi).collect()
}
