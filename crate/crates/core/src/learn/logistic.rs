//! L2-regularised logistic regression fitted by quasi-Newton minimisation of
//!
//! ```text
//! ½ wᵀw + C Σᵢ ln(1 + exp(−yᵢ (xᵢᵀw + c))),   yᵢ ∈ {−1, +1}
//! ```
//!
//! The intercept `c` is not penalised.

use serde::{Deserialize, Serialize};

use super::bfgs::{self, BfgsOptions};
use super::{check_dim, check_training, sigmoid, softplus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub c: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iter: 500,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Regularised log-loss over a fixed training set, as a function of the
/// packed parameter vector `[w₁ … w_p, c]`.
pub struct Objective<'a> {
    x: &'a [Vec<f64>],
    signs: Vec<f64>,
    c: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &[u8], c: f64) -> Self {
        let signs = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        Self { x, signs, c }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.value_and_gradient(theta).0
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let p = theta.len() - 1;
        let (w, b) = (&theta[..p], theta[p]);
        let mut grad: Vec<f64> = w.to_vec();
        grad.push(0.0);
        let mut loss = 0.0;
        for (row, &s) in self.x.iter().zip(&self.signs) {
            let margin = s * (row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b);
            loss += softplus(-margin);
            // d/dm ln(1 + e^{-m}) = -σ(-m)
            let coef = -self.c * s * sigmoid(-margin);
            for (g, v) in grad.iter_mut().zip(row) {
                *g += coef * v;
            }
            grad[p] += coef;
        }
        let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        (reg + self.c * loss, grad)
    }
}

pub fn train_logistic(x: &[Vec<f64>], y: &[u8], params: &LogisticParams) -> Result<LogisticFit> {
    let dim = check_training(x, y)?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidConfig(format!("C must be positive, got {}", params.c)));
    }
    let objective = Objective::new(x, y, params.c);
    let opts = BfgsOptions {
        grad_tol: params.grad_tol,
        max_iter: params.max_iter,
        ..BfgsOptions::default()
    };
    let min = bfgs::minimize(|t| objective.value_and_gradient(t), vec![0.0; dim + 1], &opts);
    if !min.converged {
        log::warn!(
            "logistic regression stopped after {} iterations with gradient norm {:.3e}",
            min.iterations,
            min.grad_norm
        );
    }
    let mut weights = min.x;
    let intercept = weights.pop().expect("intercept slot");
    Ok(LogisticFit {
        model: LogisticModel {
            weights,
            intercept,
            c: params.c,
        },
        objective: min.value,
        grad_norm: min.grad_norm,
        iterations: min.iterations,
        converged: min.converged,
    })
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.decision(x).map(sigmoid)
    }
}

pub fn predict_proba_logistic(model: &LogisticModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}
