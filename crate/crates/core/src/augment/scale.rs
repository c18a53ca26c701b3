//! Per-curve scalers.

/// `(x - min) / (max - min)`; a constant curve maps to zeros.
pub fn minmax_normalize(curve: &[f64]) -> Vec<f64> {
    let (min, max) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = max - min;
    if !(range > 0.0) {
        return vec![0.0; curve.len()];
    }
    // clamp guards the last ulp; the quotient is mathematically in [0, 1]
    curve
        .iter()
        .map(|&v| ((v - min) / range).clamp(0.0, 1.0))
        .collect()
}

/// Quantile of already sorted values, linear interpolation between order
/// statistics at position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl RobustStats {
    pub fn of(values: &[f64]) -> RobustStats {
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        RobustStats {
            median: quantile_sorted(&sorted, 0.5),
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// `(x - median) / IQR`, dividing by 1 when the IQR is zero.
pub fn robust_scale(curve: &[f64]) -> Vec<f64> {
    if curve.is_empty() {
        return Vec::new();
    }
    let stats = RobustStats::of(curve);
    let iqr = stats.iqr();
    let divisor = if iqr > 0.0 { iqr } else { 1.0 };
    curve.iter().map(|&v| (v - stats.median) / divisor).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_normalize(&[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax_normalize(&[7.0, 7.0, 7.0]), vec![0.0, 0.0, 0.0]);
        let once = minmax_normalize(&[3.0, -1.0, 8.5, 2.0]);
        assert_eq!(minmax_normalize(&once), once);
    }

    #[test]
    fn robust_scale_examples() {
        let out = robust_scale(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(out, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(robust_scale(&[2.5; 6]), vec![0.0; 6]);
    }

    #[test]
    fn extreme_maximum_does_not_move_others() {
        let base = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5];
        let mut spiked = base;
        spiked[4] = 900.0;
        let a = robust_scale(&base);
        let b = robust_scale(&spiked);
        for i in (0..base.len()).filter(|&i| i != 4) {
            assert_eq!(a[i], b[i]);
        }
    }

    #[test]
    fn quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.25), 1.75);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
    }
}
