//! Frequency-domain jitter.
//!
//! Each non-negative frequency bin `k` of the real DFT is scaled by `1 + eps_k`
//! and rotated by `delta_k`, with `eps ~ N(0, amp_sigma^2)` and
//! `delta ~ N(0, phase_sigma^2)`. The DC bin and, for even lengths, the Nyquist
//! bin keep their phase so the spectrum stays Hermitian and the inverse is real.
//! Draw order: for each bin in ascending order, `eps` then (if the bin is not
//! phase-fixed) `delta`.

use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::seed;

pub fn fourier_perturb(curve: &[f64], amp_sigma: f64, phase_sigma: f64, seed: u64) -> Result<Vec<f64>> {
    let len = curve.len();
    if len < 2 {
        return Err(Error::config("fourier_perturb needs at least 2 samples"));
    }
    if !(amp_sigma >= 0.0 && phase_sigma >= 0.0) {
        return Err(Error::config("fourier_perturb sigmas must be non-negative"));
    }
    let amp = Normal::new(0.0, amp_sigma)
        .map_err(|e| Error::config(format!("amp_sigma {amp_sigma}: {e}")))?;
    let phase = Normal::new(0.0, phase_sigma)
        .map_err(|e| Error::config(format!("phase_sigma {phase_sigma}: {e}")))?;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let mut spectrum: Vec<Complex64> = curve.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut spectrum);

    let mut rng = seed::rng_from_seed(seed);
    let half = len / 2;
    for k in 0..=half {
        let eps = amp.sample(&mut rng);
        let phase_fixed = k == 0 || (len.is_multiple_of(2) && k == half);
        let rot = if phase_fixed {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, phase.sample(&mut rng))
        };
        let bin = spectrum[k] * (1.0 + eps) * rot;
        // fixed bins are real for real input; drop the rounding residue
        spectrum[k] = if phase_fixed { Complex64::new(bin.re, 0.0) } else { bin };
        if k != 0 && len - k != k {
            spectrum[len - k] = spectrum[k].conj();
        }
    }

    inverse.process(&mut spectrum);
    let norm = 1.0 / len as f64;
    Ok(spectrum.iter().map(|c| c.re * norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| {
                let t = i as f64;
                1.0 + 0.3 * (t * 0.21).sin() + 0.05 * (t * 1.7).cos() - 0.002 * t
            })
            .collect()
    }

    #[test]
    fn zero_sigma_is_identity() {
        for len in [2, 7, 64, 101] {
            let x = wave(len);
            let y = fourier_perturb(&x, 0.0, 0.0, 11).unwrap();
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn seeded_output_repeats() {
        let x = wave(200);
        let a = fourier_perturb(&x, 0.05, 0.1, 3).unwrap();
        let b = fourier_perturb(&x, 0.05, 0.1, 3).unwrap();
        let c = fourier_perturb(&x, 0.05, 0.1, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn output_is_real_valued_and_length_preserving() {
        let x = wave(33);
        let y = fourier_perturb(&x, 0.1, 0.5, 1).unwrap();
        assert_eq!(y.len(), 33);
        assert!(y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn short_curve_rejected() {
        assert!(fourier_perturb(&[1.0], 0.1, 0.1, 0).is_err());
        assert!(fourier_perturb(&[1.0, 2.0], -0.1, 0.1, 0).is_err());
    }
}
