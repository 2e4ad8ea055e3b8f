//! Discrete AdaBoost over decision stumps.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, DecisionTree, SortedColumns};
use super::{check_dim, check_training, sigmoid};
use crate::error::Result;
use crate::par;

/// Floor on the weighted error so a perfect stump gets a large but finite weight.
pub const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub stump: DecisionTree,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub dim: usize,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone)]
pub struct AdaBoostFit {
    pub model: AdaBoostModel,
    /// Weighted training error of every stump considered, including the one
    /// that stopped training.
    pub errors: Vec<f64>,
    /// Sum of sample weights after each completed reweighting.
    pub weight_sums: Vec<f64>,
}

#[derive(Clone, Copy)]
struct StumpCandidate {
    error: f64,
    threshold: f64,
    /// Output for samples above the threshold; the left side gets the opposite.
    right: f64,
}

fn scan_feature(cols: &SortedColumns, f: usize, signs: &[f64], w: &[f64], w_pos: f64, w_neg: f64) -> Option<StumpCandidate> {
    let (order, values) = cols.column(f);
    let (mut pos_left, mut neg_left) = (0.0, 0.0);
    let mut best: Option<StumpCandidate> = None;
    for (j, (&i, &v)) in order.iter().zip(values).enumerate() {
        if j > 0 && v > values[j - 1] {
            // left -> -1, right -> +1
            let err_up = pos_left + (w_neg - neg_left);
            let err_down = neg_left + (w_pos - pos_left);
            let (error, right) = if err_up <= err_down { (err_up, 1.0) } else { (err_down, -1.0) };
            if best.is_none_or(|b| error < b.error) {
                best = Some(StumpCandidate {
                    error,
                    threshold: midpoint(values[j - 1], v),
                    right,
                });
            }
        }
        if signs[i as usize] > 0.0 {
            pos_left += w[i as usize];
        } else {
            neg_left += w[i as usize];
        }
    }
    best
}

fn best_stump(x: &[Vec<f64>], cols: &SortedColumns, signs: &[f64], w: &[f64]) -> (DecisionTree, f64) {
    let w_pos: f64 = signs.iter().zip(w).filter(|(s, _)| **s > 0.0).map(|(_, w)| w).sum();
    let w_neg: f64 = signs.iter().zip(w).filter(|(s, _)| **s < 0.0).map(|(_, w)| w).sum();
    let per_feature = par::map_range(cols.dim(), |f| scan_feature(cols, f, signs, w, w_pos, w_neg));

    let mut best: Option<(usize, StumpCandidate)> = None;
    for (f, c) in per_feature.into_iter().enumerate() {
        if let Some(c) = c {
            if best.is_none_or(|(_, b)| c.error < b.error) {
                best = Some((f, c));
            }
        }
    }
    let constant = if w_neg <= w_pos { 1.0 } else { -1.0 };
    let constant_error = w_pos.min(w_neg);
    let stump = match best {
        Some((f, c)) if c.error <= constant_error => {
            DecisionTree::stump(f, c.threshold, -c.right, c.right)
        }
        _ => DecisionTree::leaf(constant),
    };
    // recount exactly so a perfect stump reports zero error
    let error = x
        .iter()
        .zip(signs)
        .zip(w)
        .filter(|((row, s), _)| stump.predict(row) != **s)
        .map(|(_, w)| w)
        .sum();
    (stump, error)
}

pub fn train_adaboost(x: &[Vec<f64>], y: &[u8], n_rounds: usize) -> Result<AdaBoostFit> {
    let dim = check_training(x, y)?;
    let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let cols = SortedColumns::new(x);
    let n = x.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut errors = Vec::new();
    let mut weight_sums = Vec::new();

    for _ in 0..n_rounds {
        let (stump, error) = best_stump(x, &cols, &signs, &w);
        errors.push(error);
        if error >= 0.5 {
            break;
        }
        let e = error.max(MIN_ERROR);
        let alpha = 0.5 * ((1.0 - e) / e).ln();
        members.push(Member {
            stump: stump.clone(),
            alpha,
        });
        if error <= 0.0 {
            break;
        }
        for ((wi, row), s) in w.iter_mut().zip(x).zip(&signs) {
            *wi *= (-alpha * s * stump.predict(row)).exp();
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
        weight_sums.push(w.iter().sum());
    }
    Ok(AdaBoostFit {
        model: AdaBoostModel { dim, members },
        errors,
        weight_sums,
    })
}

impl AdaBoostModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Weighted vote `Σ αₜ hₜ(x)`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(self.members.iter().map(|m| m.alpha * m.stump.predict(x)).sum())
    }

    /// Hard vote; a zero score counts as class 1.
    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        Ok((self.decision(x)? >= 0.0) as u8)
    }

    /// Logistic calibration of the vote, `σ(2 · score)`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(2.0 * self.decision(x)?))
    }
}
