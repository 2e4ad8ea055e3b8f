//! From-scratch classifiers and model persistence.

pub mod adaboost;
pub mod bfgs;
pub mod easy;
pub mod gbm;
pub mod logistic;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{FeatureKind, FeatureParams};

pub use adaboost::{AdaBoostFit, AdaBoostModel};
pub use easy::{EasyEnsembleModel, EasyParams};
pub use gbm::{GbmFit, GbmParams, GradientBoostingModel};
pub use logistic::{LogisticFit, LogisticModel, LogisticParams};
pub use tree::DecisionTree;

pub const FORMAT_VERSION: u32 = 1;

/// Logistic link, numerically stable for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Probability 0.5 maps to class 1.
pub fn hard_label(probability: f64) -> u8 {
    (probability >= 0.5) as u8
}

/// Checks a training matrix and returns its feature dimension.
pub(crate) fn check_training(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let dim = x.first().map_or(0, Vec::len);
    for (row, v) in x.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if let Some(col) = v.iter().position(|f| !f.is_finite()) {
            return Err(Error::NonFiniteFeature { row, col });
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::invariant("training labels", format!("{bad} is not 0 or 1")));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClassInput);
    }
    Ok(dim)
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Logistic,
    Gbm,
    EasyEnsemble,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Logistic => "logistic",
            Algorithm::Gbm => "gbm",
            Algorithm::EasyEnsemble => "easy-ensemble",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" => Some(Algorithm::Logistic),
            "gbm" => Some(Algorithm::Gbm),
            "easy-ensemble" => Some(Algorithm::EasyEnsemble),
            _ => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Logistic(LogisticModel),
    Gbm(GradientBoostingModel),
    EasyEnsemble(EasyEnsembleModel),
}

impl Classifier {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Classifier::Logistic(_) => Algorithm::Logistic,
            Classifier::Gbm(_) => Algorithm::Gbm,
            Classifier::EasyEnsemble(_) => Algorithm::EasyEnsemble,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Classifier::Logistic(m) => m.dim(),
            Classifier::Gbm(m) => m.dim(),
            Classifier::EasyEnsemble(m) => m.dim(),
        }
    }

    /// Structural checks applied to deserialized parameters.
    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        match self {
            Classifier::Logistic(m) => {
                if !m.intercept.is_finite() || m.weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::CorruptModel("non-finite logistic weight".into()));
                }
            }
            Classifier::Gbm(m) => {
                if m.trees.len() != m.n_stages || !m.initial_score.is_finite() {
                    return Err(Error::CorruptModel(format!(
                        "{} trees for {} stages",
                        m.trees.len(),
                        m.n_stages
                    )));
                }
                m.trees.iter().try_for_each(|t| t.validate(dim))?;
            }
            Classifier::EasyEnsemble(m) => {
                if m.members.len() != m.n_learners {
                    return Err(Error::CorruptModel(format!(
                        "{} members for {} learners",
                        m.members.len(),
                        m.n_learners
                    )));
                }
                for member in &m.members {
                    if member.model.dim != dim {
                        return Err(Error::CorruptModel("ensemble member dimension differs".into()));
                    }
                    for s in &member.model.members {
                        if !s.alpha.is_finite() {
                            return Err(Error::CorruptModel("non-finite member weight".into()));
                        }
                        s.stump.validate(dim)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            Classifier::Logistic(m) => m.predict_proba(x),
            Classifier::Gbm(m) => m.predict_proba(x),
            Classifier::EasyEnsemble(m) => m.predict_proba(x),
        }
    }
}

/// A classifier bundled with the feature pipeline it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub feature_kind: FeatureKind,
    pub feature_params: FeatureParams,
    pub classifier: Classifier,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    algorithm: Algorithm,
    feature_kind: FeatureKind,
    feature_dim: usize,
    feature_params: FeatureParams,
    parameters: serde_json::Value,
}

impl TrainedModel {
    pub fn new(
        feature_kind: FeatureKind,
        feature_params: FeatureParams,
        classifier: Classifier,
    ) -> Result<Self> {
        let expected = feature_params.feature_dim(feature_kind);
        if classifier.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: classifier.dim(),
            });
        }
        Ok(Self {
            feature_kind,
            feature_params,
            classifier,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.classifier.dim()
    }

    pub fn algorithm(&self) -> Algorithm {
        self.classifier.algorithm()
    }

    /// Class-1 probability for one feature vector of the given kind.
    pub fn predict_proba(&self, kind: FeatureKind, x: &[f64]) -> Result<f64> {
        if kind != self.feature_kind || x.len() != self.feature_dim() {
            return Err(Error::FeatureKindMismatch {
                expected_kind: self.feature_kind.to_string(),
                expected: self.feature_dim(),
                actual_kind: kind.to_string(),
                actual: x.len(),
            });
        }
        self.classifier.predict_proba(x)
    }

    pub fn to_json(&self) -> Result<String> {
        let parameters = match &self.classifier {
            Classifier::Logistic(m) => serde_json::to_value(m),
            Classifier::Gbm(m) => serde_json::to_value(m),
            Classifier::EasyEnsemble(m) => serde_json::to_value(m),
        }
        .map_err(|e| Error::CorruptModel(e.to_string()))?;
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            algorithm: self.algorithm(),
            feature_kind: self.feature_kind,
            feature_dim: self.feature_dim(),
            feature_params: self.feature_params,
            parameters,
        };
        let mut s =
            serde_json::to_string_pretty(&file).map_err(|e| Error::CorruptModel(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let corrupt = |e: serde_json::Error| Error::CorruptModel(e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(corrupt)?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptModel("missing format_version".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(Error::UnsupportedVersion(version.min(u32::MAX as u64) as u32));
        }
        let file: ModelFile = serde_json::from_value(value).map_err(corrupt)?;
        let classifier = match file.algorithm {
            Algorithm::Logistic => {
                Classifier::Logistic(serde_json::from_value(file.parameters).map_err(corrupt)?)
            }
            Algorithm::Gbm => Classifier::Gbm(serde_json::from_value(file.parameters).map_err(corrupt)?),
            Algorithm::EasyEnsemble => {
                Classifier::EasyEnsemble(serde_json::from_value(file.parameters).map_err(corrupt)?)
            }
        };
        if classifier.dim() != file.feature_dim {
            return Err(Error::CorruptModel(format!(
                "declared feature_dim {} but parameters have {}",
                file.feature_dim,
                classifier.dim()
            )));
        }
        classifier.validate()?;
        TrainedModel::new(file.feature_kind, file.feature_params, classifier)
            .map_err(|e| Error::CorruptModel(e.to_string()))
    }
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedModel::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<u8>) {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 7.0;
                vec![t.sin(), (t * 1.3).cos(), t % 1.0]
            })
            .collect();
        let y = x.iter().map(|r| (r[0] + 0.3 * r[1] > 0.1) as u8).collect();
        (x, y)
    }

    fn params3() -> FeatureParams {
        FeatureParams {
            segment_size: 3,
            ..FeatureParams::default()
        }
    }

    #[test]
    fn all_models_round_trip_bit_exact() {
        let (x, y) = toy();
        let models = vec![
            Classifier::Logistic(logistic::train_logistic(&x, &y, &LogisticParams::default()).unwrap().model),
            Classifier::Gbm(gbm::train_gbm(&x, &y, &GbmParams { n_stages: 5, ..Default::default() }).unwrap().model),
            Classifier::EasyEnsemble(easy::train_easy_ensemble(&x, &y, &EasyParams::default(), 9).unwrap()),
        ];
        for c in models {
            let m = TrainedModel::new(FeatureKind::RawSegment, params3(), c).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            for row in &x {
                let a = m.predict_proba(FeatureKind::RawSegment, row).unwrap();
                let b = back.predict_proba(FeatureKind::RawSegment, row).unwrap();
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let (x, y) = toy();
        let c = Classifier::Logistic(logistic::train_logistic(&x, &y, &LogisticParams::default()).unwrap().model);
        let json = TrainedModel::new(FeatureKind::RawSegment, params3(), c).unwrap().to_json().unwrap();
        let cut = &json[..json.len() / 2];
        assert!(matches!(TrainedModel::from_json(cut), Err(Error::CorruptModel(_))));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let (x, y) = toy();
        let c = Classifier::Logistic(logistic::train_logistic(&x, &y, &LogisticParams::default()).unwrap().model);
        let json = TrainedModel::new(FeatureKind::RawSegment, params3(), c).unwrap().to_json().unwrap();
        let bumped = json.replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(TrainedModel::from_json(&bumped), Err(Error::UnsupportedVersion(7))));
    }

    #[test]
    fn spectrogram_model_rejects_raw_segment() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64; 10251]).collect();
        let y: Vec<u8> = (0..10).map(|i| (i >= 5) as u8).collect();
        let c = Classifier::Gbm(gbm::train_gbm(&x, &y, &GbmParams { n_stages: 2, ..Default::default() }).unwrap().model);
        let m = TrainedModel::new(FeatureKind::Spectrogram, FeatureParams::default(), c).unwrap();
        let err = m.predict_proba(FeatureKind::RawSegment, &[0.0; 100]).unwrap_err();
        assert!(matches!(err, Error::FeatureKindMismatch { .. }));
        assert!(m.predict_proba(FeatureKind::Spectrogram, &x[0]).is_ok());
    }

    #[test]
    fn link_functions() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(hard_label(0.5), 1);
        assert_eq!(hard_label(0.4999), 0);
    }

    #[test]
    fn training_checks() {
        assert!(matches!(check_training(&[vec![1.0], vec![2.0]], &[1, 1]), Err(Error::SingleClassInput)));
        assert!(matches!(
            check_training(&[vec![1.0], vec![f64::NAN]], &[0, 1]),
            Err(Error::NonFiniteFeature { row: 1, col: 0 })
        ));
        assert_eq!(check_training(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[0, 1]).unwrap(), 2);
    }
}
