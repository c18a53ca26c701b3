//! Brute-force k-nearest-neighbour classification.
//!
//! Distances are Euclidean over every feature. Equal distances rank the lower
//! training index first. A tied vote (possible for even `k`) goes to the class
//! of the single nearest neighbour.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training, check_width};
use crate::error::{Error, Result};
use crate::ingest::LabeledDataset;
use crate::linalg::squared_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub metric: Metric,
}

fn default_k() -> usize {
    4
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: default_k(),
            metric: Metric::Euclidean,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("knn k must be at least 1"));
        }
        Ok(())
    }
}

/// The stored training set.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    k: usize,
    width: usize,
}

impl KnnModel {
    pub fn from_parts(rows: Vec<Vec<f64>>, labels: Vec<u8>, k: usize) -> Result<Self> {
        let width = check_training(&rows, &labels)?;
        if k == 0 || k > rows.len() {
            return Err(Error::config(format!(
                "knn k={k} must be in 1..={} (training rows)",
                rows.len()
            )));
        }
        Ok(KnnModel {
            rows,
            labels,
            k,
            width,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Training indices of the `k` nearest rows, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut dists: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(query, r), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, order);
            dists.truncate(self.k);
        }
        dists.sort_unstable_by(order);
        dists.into_iter().map(|(_, i)| i).collect()
    }

    fn positive_votes(&self, query: &[f64]) -> (usize, u8) {
        let nn = self.neighbors(query);
        let votes = nn.iter().filter(|&&i| self.labels[i] == 1).count();
        (votes, self.labels[nn[0]])
    }

    fn vote(&self, query: &[f64]) -> u8 {
        let (pos, nearest) = self.positive_votes(query);
        let neg = self.k - pos;
        match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => nearest,
        }
    }

    pub fn predict<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<u8>> {
        check_width(x, self.width)?;
        Ok(x.par_iter().map(|q| self.vote(q.as_ref())).collect())
    }

    /// Fraction of the `k` neighbours that are positive.
    pub fn predict_scores<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<f64>> {
        check_width(x, self.width)?;
        Ok(x
            .par_iter()
            .map(|q| self.positive_votes(q.as_ref()).0 as f64 / self.k as f64)
            .collect())
    }
}

pub fn knn_fit<R: AsRef<[f64]>>(x: &[R], y: &[u8], cfg: &KnnConfig) -> Result<KnnModel> {
    cfg.validate()?;
    let rows = x.iter().map(|r| r.as_ref().to_vec()).collect();
    KnnModel::from_parts(rows, y.to_vec(), cfg.k)
}

pub fn knn_predict<R: AsRef<[f64]> + Sync>(train: &LabeledDataset, queries: &[R], k: usize) -> Result<Vec<u8>> {
    let model = knn_fit(train.curves(), train.labels(), &KnnConfig { k, ..Default::default() })?;
    model.predict(queries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rows: Vec<Vec<f64>>, labels: Vec<u8>, k: usize) -> KnnModel {
        KnnModel::from_parts(rows, labels, k).unwrap()
    }

    #[test]
    fn exact_match_with_k1() {
        let m = model(vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]], vec![0, 1, 0], 1);
        assert_eq!(m.predict(&[vec![3.0, 4.0]]).unwrap(), vec![1]);
    }

    #[test]
    fn even_vote_goes_to_nearest() {
        // two positives at distance 1 and 3, two negatives at 2 and 4
        let rows = vec![vec![1.0], vec![-2.0], vec![3.0], vec![-4.0], vec![100.0]];
        let m = model(rows, vec![1, 0, 1, 0, 0], 4);
        assert_eq!(m.predict(&[vec![0.0]]).unwrap(), vec![1]);
        assert_eq!(m.predict_scores(&[vec![0.0]]).unwrap(), vec![0.5]);

        let rows = vec![vec![1.0], vec![-2.0], vec![3.0], vec![-4.0]];
        let m = model(rows, vec![0, 1, 0, 1], 4);
        assert_eq!(m.predict(&[vec![0.0]]).unwrap(), vec![0]);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let rows = vec![vec![-1.0], vec![1.0], vec![1.0]];
        let m = model(rows, vec![0, 1, 0], 1);
        assert_eq!(m.neighbors(&[0.0]), vec![0]);
        let m = model(vec![vec![-1.0], vec![1.0], vec![1.0]], vec![1, 0, 1], 2);
        assert_eq!(m.neighbors(&[0.0]), vec![0, 1]);
    }

    #[test]
    fn k_larger_than_training_set() {
        let x = vec![vec![0.0], vec![1.0]];
        let res = knn_fit(&x, &[0, 1], &KnnConfig { k: 3, ..Default::default() });
        assert!(matches!(res, Err(Error::Config(_))));
    }

    #[test]
    fn width_mismatch() {
        let m = model(vec![vec![0.0, 1.0]], vec![1], 1);
        assert!(matches!(m.predict(&[vec![0.0]]), Err(Error::Shape { .. })));
    }
}
