//! End-to-end training and evaluation on a corpus.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{self, EvalReport, ScoreLevel, SplitPlan};
use crate::ingest::RhythmogramRecord;
use crate::learn::{
    easy, gbm, logistic, Algorithm, Classifier, EasyParams, GbmParams, LogisticParams, TrainedModel,
};
use crate::preprocess::{FeatureExtractor, FeatureKind, FeatureParams, FeatureSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: FeatureParams,
    pub split_fraction: f64,
    pub seed: u64,
    pub group_by_person: bool,
    pub level: ScoreLevel,
    pub logistic: LogisticParams,
    pub gbm: GbmParams,
    pub easy: EasyParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureParams::default(),
            split_fraction: 0.8,
            seed: 7,
            group_by_person: false,
            level: ScoreLevel::Record,
            logistic: LogisticParams::default(),
            gbm: GbmParams::default(),
            easy: EasyParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// A feature kind and algorithm pairing with a display name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: FeatureKind,
    pub algorithm: Algorithm,
}

impl ModelSpec {
    pub fn new(kind: FeatureKind, algorithm: Algorithm) -> Self {
        Self { kind, algorithm }
    }

    pub fn name(&self) -> String {
        let suffix = match self.kind {
            FeatureKind::RawSegment => "raw",
            FeatureKind::Spectrogram => "spectrogram",
        };
        format!("{}-{suffix}", self.algorithm)
    }

    /// Three raw-segment classifiers plus spectrogram boosting.
    pub fn all() -> Vec<ModelSpec> {
        vec![
            ModelSpec::new(FeatureKind::RawSegment, Algorithm::Logistic),
            ModelSpec::new(FeatureKind::RawSegment, Algorithm::Gbm),
            ModelSpec::new(FeatureKind::RawSegment, Algorithm::EasyEnsemble),
            ModelSpec::new(FeatureKind::Spectrogram, Algorithm::Gbm),
        ]
    }
}

pub fn fit_features(set: &FeatureSet, algorithm: Algorithm, cfg: &PipelineConfig) -> Result<Classifier> {
    if set.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no {} feature vectors could be cut from the training records",
            set.kind
        )));
    }
    let y = set.label_bits();
    Ok(match algorithm {
        Algorithm::Logistic => Classifier::Logistic(logistic::train_logistic(&set.rows, &y, &cfg.logistic)?.model),
        Algorithm::Gbm => Classifier::Gbm(gbm::train_gbm(&set.rows, &y, &cfg.gbm)?.model),
        Algorithm::EasyEnsemble => {
            Classifier::EasyEnsemble(easy::train_easy_ensemble(&set.rows, &y, &cfg.easy, cfg.seed)?)
        }
    })
}

pub fn train_on(records: &[&RhythmogramRecord], spec: ModelSpec, cfg: &PipelineConfig) -> Result<TrainedModel> {
    let extractor = FeatureExtractor::new(spec.kind, cfg.features)?;
    let set = extractor.build(records);
    let classifier = fit_features(&set, spec.algorithm, cfg)?;
    TrainedModel::new(spec.kind, cfg.features, classifier)
}

pub struct TrainedEntry {
    pub spec: ModelSpec,
    pub model: TrainedModel,
    pub report: EvalReport,
}

pub struct EvaluationRun {
    pub plan: SplitPlan,
    pub entries: Vec<TrainedEntry>,
}

impl EvaluationRun {
    pub fn reports(&self) -> Vec<EvalReport> {
        self.entries.iter().map(|e| e.report.clone()).collect()
    }

    pub fn report(&self, name: &str) -> Option<&EvalReport> {
        self.entries.iter().find(|e| e.report.name == name).map(|e| &e.report)
    }
}

/// Splits `records`, trains every spec on the training side and scores the
/// held-out side. Models supplied in `pretrained` are evaluated as-is.
pub fn run_evaluation(
    records: &[RhythmogramRecord],
    specs: &[ModelSpec],
    pretrained: Vec<(String, TrainedModel)>,
    cfg: &PipelineConfig,
) -> Result<EvaluationRun> {
    let plan = evaluate::split_records(records, cfg.split_fraction, cfg.seed, cfg.group_by_person)?;
    let (train, test) = plan.partition(records);

    let mut entries = Vec::new();
    let mut jobs: Vec<(String, ModelSpec, Option<TrainedModel>)> =
        specs.iter().map(|s| (s.name(), *s, None)).collect();
    jobs.extend(
        pretrained
            .into_iter()
            .map(|(name, m)| (name, ModelSpec::new(m.feature_kind, m.algorithm()), Some(m))),
    );

    for (name, spec, model) in jobs {
        let params = model.as_ref().map_or(cfg.features, |m| m.feature_params);
        let extractor = FeatureExtractor::new(spec.kind, params)?;
        let test_set = extractor.build(&test);
        let model = match model {
            Some(m) => m,
            None => {
                let train_set = extractor.build(&train);
                SplitPlan::check_no_leakage(&train_set, &test_set)?;
                log::info!("training {name} on {} vectors of dim {}", train_set.len(), train_set.dim);
                let classifier = fit_features(&train_set, spec.algorithm, cfg)?;
                TrainedModel::new(spec.kind, cfg.features, classifier)?
            }
        };
        let report = evaluate::evaluate_model(&name, &model, &test_set, cfg.level)?;
        entries.push(TrainedEntry { spec, model, report });
    }
    Ok(EvaluationRun { plan, entries })
}
