//! Gradient boosting with logistic (deviance) loss.
//!
//! Each stage fits a least-squares tree to the negative gradient `y − p` of
//! the log-loss at the current scores, and adds `learning_rate × tree` to
//! the score. Leaves hold the mean residual, so every stage is a descent
//! step on the per-leaf loss for any learning rate below 8.

use serde::{Deserialize, Serialize};

use super::tree::{self, DecisionTree, SortedColumns};
use super::{check_dim, check_training, sigmoid, softplus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingModel {
    pub initial_score: f64,
    pub learning_rate: f64,
    pub n_stages: usize,
    pub dim: usize,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone)]
pub struct GbmFit {
    pub model: GradientBoostingModel,
    /// Mean training log-loss before the first stage and after each stage.
    pub loss_curve: Vec<f64>,
}

fn mean_log_loss(scores: &[f64], y: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(&f, &l)| softplus(if l == 1 { -f } else { f }))
        .sum();
    total / scores.len() as f64
}

pub fn train_gbm(x: &[Vec<f64>], y: &[u8], params: &GbmParams) -> Result<GbmFit> {
    let dim = check_training(x, y)?;
    if params.n_stages == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(
            "gbm needs at least one stage and a positive learning rate".into(),
        ));
    }
    let min_leaf = params.min_samples_leaf.max(1);
    let n1 = y.iter().filter(|&&l| l == 1).count() as f64;
    let n0 = y.len() as f64 - n1;
    let initial_score = (n1 / n0).ln();

    let cols = SortedColumns::new(x);
    let mut scores = vec![initial_score; y.len()];
    let mut loss_curve = vec![mean_log_loss(&scores, y)];
    let mut trees = Vec::with_capacity(params.n_stages);
    for _ in 0..params.n_stages {
        let residuals: Vec<f64> = scores
            .iter()
            .zip(y)
            .map(|(&f, &l)| l as f64 - sigmoid(f))
            .collect();
        let (tree, leaf_of) = tree::grow(x, &cols, &residuals, params.max_depth, min_leaf);
        let leaf_value: Vec<f64> = tree
            .nodes()
            .iter()
            .map(|n| match n {
                tree::Node::Leaf { value } => *value,
                tree::Node::Split { .. } => 0.0,
            })
            .collect();
        for (s, &leaf) in scores.iter_mut().zip(&leaf_of) {
            *s += params.learning_rate * leaf_value[leaf as usize];
        }
        loss_curve.push(mean_log_loss(&scores, y));
        trees.push(tree);
    }
    Ok(GbmFit {
        model: GradientBoostingModel {
            initial_score,
            learning_rate: params.learning_rate,
            n_stages: params.n_stages,
            dim,
            trees,
        },
        loss_curve,
    })
}

impl GradientBoostingModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(self.initial_score + self.learning_rate * sum)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.decision(x).map(sigmoid)
    }
}

pub fn predict_proba_gbm(model: &GradientBoostingModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}
