//! Classifiers behind one fit/predict contract.
//!
//! All three models take feature rows as any `AsRef<[f64]>` slice so that
//! [`LightCurve`](crate::LightCurve)s and plain `Vec<f64>` rows work alike.
//! The positive class is `1`.

pub mod codec;
mod forest;
mod knn;
mod logreg;

pub use forest::{
    forest_fit, gini_impurity, DecisionTree, ForestConfig, ForestModel, MaxFeatures, Node,
    TreeParams,
};
pub use knn::{knn_fit, knn_predict, KnnConfig, KnnModel, Metric};
pub use logreg::{
    logistic_loss, logreg_fit, logreg_fit_traced, loss_gradient, LogRegConfig, LogRegModel,
    StepRule,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 / (1 + e^-x)`, evaluated as `e^x / (1 + e^x)` for negative `x` so that
/// neither branch overflows.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClassifierConfig {
    #[serde(rename = "logreg")]
    LogReg(LogRegConfig),
    Knn(KnnConfig),
    RandomForest(ForestConfig),
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierConfig::LogReg(c) => c.validate(),
            ClassifierConfig::Knn(c) => c.validate(),
            ClassifierConfig::RandomForest(c) => c.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierConfig::LogReg(_) => "logreg",
            ClassifierConfig::Knn(_) => "knn",
            ClassifierConfig::RandomForest(_) => "random_forest",
        }
    }

    pub fn fit<R: AsRef<[f64]> + Sync>(&self, x: &[R], y: &[u8]) -> Result<TrainedModel> {
        self.validate()?;
        Ok(match self {
            ClassifierConfig::LogReg(c) => TrainedModel::LogReg(logreg_fit(x, y, c)?),
            ClassifierConfig::Knn(c) => TrainedModel::Knn(knn_fit(x, y, c)?),
            ClassifierConfig::RandomForest(c) => TrainedModel::Forest(forest_fit(x, y, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    LogReg(LogRegModel),
    Knn(KnnModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn width(&self) -> usize {
        match self {
            TrainedModel::LogReg(m) => m.weights.len(),
            TrainedModel::Knn(m) => m.width(),
            TrainedModel::Forest(m) => m.width(),
        }
    }

    pub fn predict<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<u8>> {
        match self {
            TrainedModel::LogReg(m) => m.predict(x),
            TrainedModel::Knn(m) => m.predict(x),
            TrainedModel::Forest(m) => m.predict(x),
        }
    }

    /// Positive-class score in [0, 1]: the probability for logistic regression,
    /// the positive vote share for KNN and the forest.
    pub fn predict_scores<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<f64>> {
        match self {
            TrainedModel::LogReg(m) => m.predict_proba(x),
            TrainedModel::Knn(m) => m.predict_scores(x),
            TrainedModel::Forest(m) => m.predict_scores(x),
        }
    }
}

/// Checks a training set and returns its width.
pub(crate) fn check_training<R: AsRef<[f64]>>(x: &[R], y: &[u8]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Label(format!("label {bad} is not 0 or 1")));
    }
    let width = x[0].as_ref().len();
    check_width(x, width)?;
    if x.iter().flat_map(|r| r.as_ref()).any(|v| !v.is_finite()) {
        return Err(Error::Validation("training features must be finite".into()));
    }
    Ok(width)
}

pub(crate) fn check_width<R: AsRef<[f64]>>(x: &[R], width: usize) -> Result<()> {
    match x.iter().find(|r| r.as_ref().len() != width) {
        Some(r) => Err(Error::Shape {
            expected: width,
            got: r.as_ref().len(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        for x in [0.1, 1.0, 10.0, 100.0] {
            assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-15, "{x}");
        }
        assert!(sigmoid(700.0) <= 1.0 && sigmoid(-700.0) > 0.0);
        assert!(sigmoid(-745.0).is_finite());
    }

    #[test]
    fn config_tags_parse() {
        let text = r#"
            [[c]]
            model = "logreg"
            max_iter = 50

            [[c]]
            model = "knn"
            k = 3

            [[c]]
            model = "random_forest"
            n_trees = 10
            max_features = "all"
        "#;
        #[derive(Deserialize)]
        struct Doc {
            c: Vec<ClassifierConfig>,
        }
        let doc: Doc = toml::from_str(text).unwrap();
        assert_eq!(doc.c[0].kind(), "logreg");
        match &doc.c[1] {
            ClassifierConfig::Knn(k) => assert_eq!(k.k, 3),
            other => panic!("{other:?}"),
        }
        match &doc.c[2] {
            ClassifierConfig::RandomForest(f) => {
                assert_eq!(f.n_trees, 10);
                assert_eq!(f.max_features, MaxFeatures::All);
                assert_eq!(f.seed, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn training_checks() {
        let x = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(check_training(&x, &[0, 1]), Err(Error::Shape { .. })));
        let x = vec![vec![1.0], vec![f64::NAN]];
        assert!(check_training(&x, &[0, 1]).is_err());
        let x: Vec<Vec<f64>> = vec![];
        assert!(check_training(&x, &[]).is_err());
        let x = vec![vec![1.0]];
        assert!(matches!(check_training(&x, &[2]), Err(Error::Label(_))));
    }
}
