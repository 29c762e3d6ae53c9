//! Discrete posterior over linear reward weights.
//!
//! The reward space is every vector in `W^D` for an ordered weight set `W`.
//! Vectors are enumerated lexicographically over weight-set indices with
//! feature 0 the most significant digit, so for `W = {-2, -1, 0, 1}` and
//! `D = 3` the order is `(-2,-2,-2), (-2,-2,-1), ..., (1,1,1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::envmodel::{DemonstrationSet, Environment};
use crate::error::{Error, Result};
use crate::maxent::{demo_log_likelihood, log_sum_exp};

pub const DEFAULT_WEIGHT_SET: [f64; 4] = [-2.0, -1.0, 0.0, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpace {
    weight_set: Vec<f64>,
    dim: usize,
}

impl RewardSpace {
    /// `weight_set` must be finite and strictly increasing.
    pub fn new(weight_set: Vec<f64>, dim: usize) -> Result<Self> {
        if weight_set.is_empty() || dim == 0 {
            return Err(Error::InvalidParameter(
                "reward space needs a nonempty weight set and dimension >= 1".into(),
            ));
        }
        if weight_set.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("weight set must be finite".into()));
        }
        if weight_set.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidParameter(format!(
                "weight set must be strictly increasing, got {weight_set:?}"
            )));
        }
        let len = u32::try_from(dim)
            .ok()
            .and_then(|d| weight_set.len().checked_pow(d));
        if len.is_none() {
            return Err(Error::InvalidParameter(format!(
                "reward space |W|^D = {}^{dim} is too large",
                weight_set.len()
            )));
        }
        Ok(RewardSpace { weight_set, dim })
    }

    pub fn with_default_weights(dim: usize) -> Result<Self> {
        Self::new(DEFAULT_WEIGHT_SET.to_vec(), dim)
    }

    pub fn weight_set(&self) -> &[f64] {
        &self.weight_set
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// |R| = |W|^D.
    pub fn len(&self) -> usize {
        self.weight_set.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_weight(&self) -> f64 {
        self.weight_set[0]
    }

    /// Weight-set indices of the vector at `index`.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let base = self.weight_set.len();
        let mut digits = vec![0; self.dim];
        for d in digits.iter_mut().rev() {
            *d = index % base;
            index /= base;
        }
        digits
    }

    pub fn vector(&self, index: usize) -> Vec<f64> {
        self.digits(index)
            .into_iter()
            .map(|k| self.weight_set[k])
            .collect()
    }

    pub fn vectors(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.vector(i))
    }

    pub fn index_of(&self, w: &[f64]) -> Option<usize> {
        if w.len() != self.dim {
            return None;
        }
        let base = self.weight_set.len();
        w.iter().try_fold(0usize, |acc, v| {
            let k = self.weight_set.iter().position(|x| x == v)?;
            Some(acc * base + k)
        })
    }
}

/// Prior over the reward space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PriorSpec {
    /// Uniform except for constant vectors, which get zero mass.
    ModifiedUniform,
    /// Dirichlet density evaluated at `softmax(w)`; every `alpha_i > 1`.
    Dirichlet { alpha: Vec<f64> },
}

impl PriorSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PriorSpec::ModifiedUniform => Ok(()),
            PriorSpec::Dirichlet { alpha } => {
                if alpha.len() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "dirichlet alpha has {} entries, feature dimension is {dim}",
                        alpha.len()
                    )));
                }
                check_alpha(alpha)
            }
        }
    }

    /// Unnormalized log prior score of `w`; `-inf` for zero mass.
    pub fn log_score(&self, w: &[f64], space: &RewardSpace) -> Result<f64> {
        match self {
            PriorSpec::ModifiedUniform => Ok(modified_uniform_prior(w, space)?.ln()),
            PriorSpec::Dirichlet { alpha } => {
                if space.index_of(w).is_none() {
                    return Err(Error::NotInSpace(w.to_vec()));
                }
                dirichlet_log_prior(w, alpha)
            }
        }
    }
}

fn check_alpha(alpha: &[f64]) -> Result<()> {
    match alpha.iter().find(|a| !(a.is_finite() && **a > 1.0)) {
        Some(a) => Err(Error::InvalidParameter(format!(
            "dirichlet concentration must exceed 1, got {a}"
        ))),
        None => Ok(()),
    }
}

/// Zero on constant vectors, `1 / (|R| - |W|)` elsewhere.
pub fn modified_uniform_prior(w: &[f64], space: &RewardSpace) -> Result<f64> {
    if space.index_of(w).is_none() {
        return Err(Error::NotInSpace(w.to_vec()));
    }
    if w.windows(2).all(|p| p[0] == p[1]) {
        return Ok(0.0);
    }
    Ok(1.0 / (space.len() - space.weight_set().len()) as f64)
}

pub fn softmax(w: &[f64]) -> Vec<f64> {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Log Dirichlet density at a simplex point `p`.
pub fn dirichlet_log_density(p: &[f64], alpha: &[f64]) -> f64 {
    let alpha_sum: f64 = alpha.iter().sum();
    let log_norm = ln_gamma(alpha_sum) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    log_norm
        + p.iter()
            .zip(alpha)
            .map(|(pi, a)| (a - 1.0) * pi.ln())
            .sum::<f64>()
}

fn dirichlet_log_prior(w: &[f64], alpha: &[f64]) -> Result<f64> {
    check_alpha(alpha)?;
    if w.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: w.len(),
        });
    }
    Ok(dirichlet_log_density(&softmax(w), alpha))
}

/// Dirichlet(alpha) density at `softmax(w)`.
pub fn dirichlet_prior(w: &[f64], alpha: &[f64]) -> Result<f64> {
    dirichlet_log_prior(w, alpha).map(f64::exp)
}

/// Probability mass over a [`RewardSpace`], aligned with its ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    space: RewardSpace,
    mass: Vec<f64>,
}

impl Posterior {
    pub fn space(&self) -> &RewardSpace {
        &self.space
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Index and mass of the most probable vector; the first one on ties.
    pub fn argmax(&self) -> (usize, f64) {
        self.mass
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, m)| {
                if m > best.1 {
                    (i, m)
                } else {
                    best
                }
            })
    }

    pub fn marginal(&self, feature_index: usize) -> Result<Marginal> {
        marginalize(self, feature_index)
    }

    pub fn marginals(&self) -> Vec<Marginal> {
        (0..self.space.dim())
            .map(|i| marginalize(self, i).expect("index within dimension"))
            .collect()
    }

    pub fn to_export(&self) -> PosteriorExport {
        PosteriorExport {
            weight_set: self.space.weight_set().to_vec(),
            vectors: self.space.vectors().collect(),
            mass: self.mass.clone(),
        }
    }

    pub fn from_export(export: PosteriorExport) -> Result<Self> {
        let dim = export.vectors.first().map_or(0, Vec::len);
        let space = RewardSpace::new(export.weight_set, dim)?;
        if export.vectors.len() != space.len() || export.mass.len() != space.len() {
            return Err(Error::InvalidParameter(
                "posterior export is not aligned with its reward space".into(),
            ));
        }
        if export
            .vectors
            .iter()
            .enumerate()
            .any(|(i, v)| *v != space.vector(i))
        {
            return Err(Error::InvalidParameter(
                "posterior export vectors are not in canonical order".into(),
            ));
        }
        let total: f64 = export.mass.iter().sum();
        if export.mass.iter().any(|m| m.is_nan() || *m < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "posterior export masses do not form a distribution".into(),
            ));
        }
        Ok(Posterior {
            space,
            mass: export.mass,
        })
    }
}

/// Aligned arrays of weight vectors and their posterior masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorExport {
    pub weight_set: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

/// Posterior from per-vector demonstration log-likelihoods and a prior,
/// normalized in log space.
pub fn posterior_from_log_likelihoods(
    space: &RewardSpace,
    log_likelihoods: &[f64],
    prior: &PriorSpec,
) -> Result<Posterior> {
    if log_likelihoods.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            got: log_likelihoods.len(),
        });
    }
    prior.validate(space.dim())?;
    let log_joint = log_likelihoods
        .iter()
        .enumerate()
        .map(|(i, ll)| Ok(ll + prior.log_score(&space.vector(i), space)?))
        .collect::<Result<Vec<f64>>>()?;
    let log_evidence = log_sum_exp(log_joint.iter().copied());
    if !log_evidence.is_finite() {
        return Err(Error::DegeneratePosterior);
    }
    let mass = log_joint
        .iter()
        .map(|l| (l - log_evidence).exp())
        .collect();
    Ok(Posterior {
        space: space.clone(),
        mass,
    })
}

/// Demonstration log-likelihood for every vector of the space, in order.
pub fn space_log_likelihoods(
    env: &Environment,
    demos: &DemonstrationSet,
    beta: f64,
    space: &RewardSpace,
) -> Result<Vec<f64>> {
    if space.dim() != env.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: env.feature_dim(),
            got: space.dim(),
        });
    }
    demos.validate(env)?;
    (0..space.len())
        .into_par_iter()
        .map(|i| demo_log_likelihood(env, demos, &space.vector(i), beta))
        .collect()
}

/// Evaluates likelihood times prior at every point of the space and
/// normalizes by their sum.
pub fn compute_posterior(
    env: &Environment,
    demos: &DemonstrationSet,
    beta: f64,
    space: &RewardSpace,
    prior: &PriorSpec,
) -> Result<Posterior> {
    prior.validate(space.dim())?;
    let lls = space_log_likelihoods(env, demos, beta, space)?;
    posterior_from_log_likelihoods(space, &lls, prior)
}

/// Marginal distribution of one feature's weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub feature_index: usize,
    /// The weight set, aligned with `probs`.
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn expectation(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| v * p)
            .sum()
    }
}

pub fn marginalize(post: &Posterior, feature_index: usize) -> Result<Marginal> {
    let space = post.space();
    if feature_index >= space.dim() {
        return Err(Error::InvalidParameter(format!(
            "feature index {feature_index} out of range for dimension {}",
            space.dim()
        )));
    }
    let base = space.weight_set().len();
    let stride = base.pow((space.dim() - 1 - feature_index) as u32);
    let mut probs = vec![0.0; base];
    for (i, m) in post.mass().iter().enumerate() {
        probs[(i / stride) % base] += m;
    }
    Ok(Marginal {
        feature_index,
        values: space.weight_set().to_vec(),
        probs,
    })
}
