//! Savitzky-Golay smoothing.
//!
//! Center-point weights come from the Gram-polynomial expansion of the
//! least-squares fit (Gorry's recurrence), which avoids forming and inverting
//! the normal equations. Edges are handled by mirror padding: sample `-k`
//! reads sample `k`, sample `L-1+k` reads `L-1-k`.

use crate::error::{Error, Result};

fn check_params(window: usize, polyorder: usize) -> Result<()> {
    if window.is_multiple_of(2) {
        return Err(Error::config(format!("savgol window {window} must be odd")));
    }
    if window <= polyorder {
        return Err(Error::config(format!(
            "savgol window {window} must exceed polyorder {polyorder}"
        )));
    }
    Ok(())
}

/// Gram polynomials `P_0..=P_order` over `2m+1` points, evaluated at `i`.
fn gram_polynomials(m: usize, order: usize, i: f64) -> Vec<f64> {
    let m2 = (2 * m) as f64;
    let mut p = Vec::with_capacity(order + 1);
    p.push(1.0);
    for k in 1..=order {
        let kf = k as f64;
        let denom = kf * (m2 - kf + 1.0);
        let prev = p[k - 1];
        let prev2 = if k >= 2 { p[k - 2] } else { 0.0 };
        let a = 2.0 * (2.0 * kf - 1.0) / denom;
        let b = (kf - 1.0) * (m2 + kf) / denom;
        p.push(a * i * prev - b * prev2);
    }
    p
}

/// `a (a-1) ... (a-b+1)`
fn falling_factorial(a: f64, b: usize) -> f64 {
    (0..b).map(|j| a - j as f64).product()
}

/// Smoothing weights for the center of a `window`-point window, ordered from
/// offset `-h` to `+h`.
pub fn savgol_coefficients(window: usize, polyorder: usize) -> Result<Vec<f64>> {
    check_params(window, polyorder)?;
    let m = window / 2;
    let m2 = (2 * m) as f64;
    let scale: Vec<f64> = (0..=polyorder)
        .map(|k| {
            (2 * k + 1) as f64 * falling_factorial(m2, k) / falling_factorial(m2 + k as f64 + 1.0, k + 1)
        })
        .collect();
    let at_center = gram_polynomials(m, polyorder, 0.0);
    let weights = (-(m as i64)..=m as i64)
        .map(|i| {
            let at_i = gram_polynomials(m, polyorder, i as f64);
            (0..=polyorder)
                .map(|k| scale[k] * at_i[k] * at_center[k])
                .sum()
        })
        .collect();
    Ok(weights)
}

pub fn savgol_filter(curve: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    let len = curve.len();
    if window > len {
        return Err(Error::config(format!(
            "savgol window {window} longer than curve ({len} samples)"
        )));
    }
    let weights = savgol_coefficients(window, polyorder)?;
    Ok(apply(curve, &weights))
}

fn mirror(idx: isize, len: usize) -> usize {
    let last = len as isize - 1;
    if idx < 0 {
        (-idx) as usize
    } else if idx > last {
        (2 * last - idx) as usize
    } else {
        idx as usize
    }
}

pub(crate) fn apply(curve: &[f64], weights: &[f64]) -> Vec<f64> {
    let len = curve.len();
    let h = weights.len() / 2;
    (0..len)
        .map(|i| {
            if i >= h && i + h < len {
                curve[i - h..=i + h]
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| x * w)
                    .sum()
            } else {
                weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * curve[mirror(i as isize + j as isize - h as isize, len)])
                    .sum()
            }
        })
        .collect()
}
