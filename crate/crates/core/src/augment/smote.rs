//! Synthetic minority oversampling.
//!
//! A synthetic sample is `x + lambda * (x_nn - x)` where `x` is a uniformly
//! chosen minority sample, `x_nn` one of its `k` nearest minority neighbours
//! (Euclidean, ties by lower index) chosen uniformly, and `lambda ~ U[0, 1)`.
//! Sample `i` draws from its own sub-stream of `seed`, so generation is
//! independent of thread count.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::squared_distance;
use crate::seed;

/// Provenance of one synthetic sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoteDraw {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

/// Indices of the `k` nearest other samples for every sample.
pub fn minority_neighbors<R: AsRef<[f64]> + Sync>(minority: &[R], k: usize) -> Vec<Vec<usize>> {
    minority
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut dists: Vec<(f64, usize)> = minority
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, y)| (squared_distance(x.as_ref(), y.as_ref()), j))
                .collect();
            dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists.truncate(k);
            dists.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

fn check<R>(minority: &[R], k: usize) -> Result<()> {
    if minority.len() < 2 {
        return Err(Error::config(format!(
            "smote needs at least 2 minority samples, got {}",
            minority.len()
        )));
    }
    if k == 0 || k >= minority.len() {
        return Err(Error::config(format!(
            "smote k_neighbors must be in 1..{}, got {k}",
            minority.len()
        )));
    }
    Ok(())
}

/// The base/neighbor/lambda choices `smote` would make, without building samples.
pub fn smote_plan<R: AsRef<[f64]> + Sync>(
    minority: &[R],
    k: usize,
    n_synthetic: usize,
    seed: u64,
) -> Result<Vec<SmoteDraw>> {
    check(minority, k)?;
    let neighbors = minority_neighbors(minority, k);
    Ok(draws(&neighbors, n_synthetic, seed))
}

fn draws(neighbors: &[Vec<usize>], n_synthetic: usize, seed: u64) -> Vec<SmoteDraw> {
    (0..n_synthetic)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::substream(seed, &[i as u64]);
            let base = rng.random_range(0..neighbors.len() as u64) as usize;
            let pick = rng.random_range(0..neighbors[base].len() as u64) as usize;
            SmoteDraw {
                base,
                neighbor: neighbors[base][pick],
                lambda: rng.random::<f64>(),
            }
        })
        .collect()
}

pub fn interpolate(x: &[f64], nn: &[f64], lambda: f64) -> Vec<f64> {
    x.iter()
        .zip(nn)
        .map(|(&a, &b)| {
            let s = a + lambda * (b - a);
            // rounding can land one ulp outside the segment
            s.clamp(a.min(b), a.max(b))
        })
        .collect()
}

pub fn smote<R: AsRef<[f64]> + Sync>(
    minority: &[R],
    k: usize,
    n_synthetic: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let plan = smote_plan(minority, k, n_synthetic, seed)?;
    Ok(plan
        .par_iter()
        .map(|d| interpolate(minority[d.base].as_ref(), minority[d.neighbor].as_ref(), d.lambda))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair_reproduces_itself() {
        let m = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let out = smote(&m, 1, 20, 5).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|s| s == &m[0]));
    }

    #[test]
    fn neighbors_exclude_self_and_break_ties_by_index() {
        let m = vec![vec![0.0], vec![1.0], vec![-1.0], vec![5.0]];
        let nn = minority_neighbors(&m, 2);
        assert_eq!(nn[0], vec![1, 2]);
        assert_eq!(nn[3], vec![1, 0]);
    }

    #[test]
    fn samples_stay_within_pair_bounds() {
        let m: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..4).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect())
            .collect();
        let plan = smote_plan(&m, 3, 500, 1).unwrap();
        let out = smote(&m, 3, 500, 1).unwrap();
        for (d, s) in plan.iter().zip(&out) {
            assert!((0.0..1.0).contains(&d.lambda));
            assert_ne!(d.base, d.neighbor);
            for j in 0..4 {
                let (a, b) = (m[d.base][j], m[d.neighbor][j]);
                assert!(a.min(b) <= s[j] && s[j] <= a.max(b));
            }
        }
    }

    #[test]
    fn exact_count_and_determinism() {
        let m = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 1.0]];
        let a = smote(&m, 2, 5013, 77).unwrap();
        assert_eq!(a.len(), 5013);
        assert_eq!(a, smote(&m, 2, 5013, 77).unwrap());
    }

    #[test]
    fn rejects_degenerate_configs() {
        let one = vec![vec![1.0]];
        assert!(matches!(smote(&one, 1, 3, 0), Err(Error::Config(_))));
        let two = vec![vec![1.0], vec![2.0]];
        assert!(matches!(smote(&two, 2, 3, 0), Err(Error::Config(_))));
        assert!(matches!(smote(&two, 0, 3, 0), Err(Error::Config(_))));
        assert!(smote(&two, 1, 0, 0).unwrap().is_empty());
    }
}
