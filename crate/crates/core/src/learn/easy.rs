//! EasyEnsemble: AdaBoost members trained on balanced undersamples.
//!
//! Every member sees the whole minority class plus a uniform random subset of
//! the majority class of the same size. Member `k` draws from a ChaCha stream
//! keyed by `(seed, k)`, so members can train in any order or in parallel and
//! still produce the same model.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adaboost::{train_adaboost, AdaBoostModel};
use super::{check_dim, check_training};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EasyParams {
    pub n_learners: usize,
    pub n_rounds: usize,
}

impl Default for EasyParams {
    fn default() -> Self {
        Self {
            n_learners: 10,
            n_rounds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyMember {
    pub model: AdaBoostModel,
    /// Training-row indices this member saw, ascending.
    pub subset: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyEnsembleModel {
    pub n_learners: usize,
    pub dim: usize,
    pub members: Vec<EasyMember>,
}

pub(crate) fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

/// Row indices of a balanced undersample for member `k`.
pub fn balanced_subset(y: &[u8], seed: u64, member: usize) -> Vec<usize> {
    let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i] == 1);
    let (minority, majority) = if ones.len() <= zeros.len() {
        (ones, zeros)
    } else {
        (zeros, ones)
    };
    let mut rng = member_rng(seed, member);
    let picked = index::sample(&mut rng, majority.len(), minority.len());
    let mut subset = minority;
    subset.extend(picked.iter().map(|j| majority[j]));
    subset.sort_unstable();
    subset
}

pub fn train_easy_ensemble(
    x: &[Vec<f64>],
    y: &[u8],
    params: &EasyParams,
    seed: u64,
) -> Result<EasyEnsembleModel> {
    let dim = check_training(x, y)?;
    if params.n_learners == 0 {
        return Err(Error::InvalidConfig("easy ensemble needs at least one learner".into()));
    }
    let members = par::map_range(params.n_learners, |k| {
        let subset = balanced_subset(y, seed, k);
        let xs: Vec<Vec<f64>> = subset.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<u8> = subset.iter().map(|&i| y[i]).collect();
        train_adaboost(&xs, &ys, params.n_rounds).map(|fit| EasyMember {
            model: fit.model,
            subset,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EasyEnsembleModel {
        n_learners: params.n_learners,
        dim,
        members,
    })
}

impl EasyEnsembleModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fraction of members voting for class 1.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        let mut votes = 0usize;
        for m in &self.members {
            votes += m.model.predict_label(x)? as usize;
        }
        Ok(votes as f64 / self.members.len() as f64)
    }
}

pub fn predict_proba_easy(model: &EasyEnsembleModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}
