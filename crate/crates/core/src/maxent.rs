//! Maximum-entropy trajectory distribution over a finite horizon.
//!
//! For a start cell and a step count `h`, the trajectory set is every
//! sequence of `h` actions; each one induces a state sequence `xi` with
//! `h + 1` states, and
//!
//! ```text
//! P(xi | w) = exp(beta * w . phi(xi)) / Z,    phi(xi) = sum_t phi(s_t)
//! ```
//!
//! Everything is computed with a backward soft Bellman recursion in log
//! space and a forward pass over state visitation. No discounting is
//! applied; the horizon bounds the return.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::envmodel::{feature_count, Action, Cell, DemonstrationSet, Environment, Trajectory};
use crate::error::{Error, Result};

/// Linear reward weights, one per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn zeros(dim: usize) -> Self {
        RewardVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn check(weights: &[f64], env: &Environment) -> Result<()> {
        if weights.len() != env.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: env.feature_dim(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteWeights(weights.to_vec()));
        }
        Ok(())
    }
}

impl Deref for RewardVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for RewardVector {
    fn from(v: Vec<f64>) -> Self {
        RewardVector(v)
    }
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence beta must be finite and >= 0, got {beta}"
        )));
    }
    Ok(())
}

/// Result of finite-horizon soft value iteration from one start cell.
#[derive(Clone, Debug)]
pub struct SoftDp {
    beta: f64,
    horizon: usize,
    start: usize,
    successors: Vec<[usize; 5]>,
    // values[k][s]: log of the summed exp(beta * return) over every k-step
    // continuation from s, counting s's own reward.
    values: Vec<Vec<f64>>,
    // visitation[t][s]: probability of occupying s at time t.
    visitation: Vec<Vec<f64>>,
}

/// Runs soft value iteration for `horizon` steps from `start`. When `goal` is
/// given it is absorbing.
pub fn soft_value_iteration(
    env: &Environment,
    weights: &[f64],
    beta: f64,
    start: Cell,
    goal: Option<Cell>,
    horizon: usize,
) -> Result<SoftDp> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    SoftDp::compute(env, weights, beta, start, goal, horizon)
}

impl SoftDp {
    fn compute(
        env: &Environment,
        weights: &[f64],
        beta: f64,
        start: Cell,
        goal: Option<Cell>,
        horizon: usize,
    ) -> Result<Self> {
        RewardVector::check(weights, env)?;
        check_beta(beta)?;
        let start_index = env
            .index_of(start)
            .filter(|&i| env.is_open_index(i))
            .ok_or_else(|| Error::InvalidParameter(format!("start {start} is not an open cell")))?;
        if let Some(g) = goal {
            if !env.is_open(g) {
                return Err(Error::InvalidParameter(format!(
                    "goal {g} is not an open cell"
                )));
            }
        }

        let successors = env.successor_table(goal);
        let scaled: Vec<f64> = env
            .cell_rewards(weights)?
            .into_iter()
            .map(|r| beta * r)
            .collect();

        let mut values = Vec::with_capacity(horizon + 1);
        values.push(scaled.clone());
        for k in 0..horizon {
            let prev: &Vec<f64> = &values[k];
            let next: Vec<f64> = successors
                .iter()
                .zip(&scaled)
                .map(|(succ, r)| r + log_sum_exp(succ.iter().map(|&s| prev[s])))
                .collect();
            values.push(next);
        }

        let mut dp = SoftDp {
            beta,
            horizon,
            start: start_index,
            successors,
            values,
            visitation: Vec::new(),
        };
        dp.visitation = dp.forward(horizon);
        Ok(dp)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// log Z over all `horizon`-step trajectories from the start cell.
    pub fn log_z(&self) -> f64 {
        self.values[self.horizon][self.start]
    }

    /// log Z over all `steps`-step trajectories from the start cell, for any
    /// `steps <= horizon`.
    pub fn log_z_for_steps(&self, steps: usize) -> f64 {
        self.values[steps][self.start]
    }

    // Policy for an episode of `steps` total steps, at time t.
    fn policy_log_probs(&self, steps: usize, t: usize, state: usize) -> [f64; 5] {
        let remaining = &self.values[steps - t - 1];
        let succ = &self.successors[state];
        let norm = log_sum_exp(succ.iter().map(|&s| remaining[s]));
        let mut out = [0.0; 5];
        for (o, &s) in out.iter_mut().zip(succ) {
            *o = remaining[s] - norm;
        }
        out
    }

    /// Action log-probabilities at time `t < horizon` in `state`, ordered as
    /// [`Action::ALL`].
    pub fn action_log_probs(&self, t: usize, state_index: usize) -> [f64; 5] {
        assert!(t < self.horizon, "time {t} beyond horizon {}", self.horizon);
        self.policy_log_probs(self.horizon, t, state_index)
    }

    pub fn action_probs(&self, t: usize, state_index: usize) -> [f64; 5] {
        self.action_log_probs(t, state_index).map(f64::exp)
    }

    /// Successor of `state_index` under `action`, goal absorption included.
    pub fn successor(&self, state_index: usize, action: Action) -> usize {
        let slot = Action::ALL.iter().position(|&a| a == action).unwrap();
        self.successors[state_index][slot]
    }

    pub fn start_index(&self) -> usize {
        self.start
    }

    /// State distribution at time `t` for `t` in `0..=horizon`.
    pub fn visitation(&self, t: usize) -> &[f64] {
        &self.visitation[t]
    }

    fn forward(&self, steps: usize) -> Vec<Vec<f64>> {
        let n = self.successors.len();
        let mut dist = vec![0.0; n];
        dist[self.start] = 1.0;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(dist);
        for t in 0..steps {
            let cur = &out[t];
            let mut next = vec![0.0; n];
            for (s, &p) in cur.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let lp = self.policy_log_probs(steps, t, s);
                for (&succ, l) in self.successors[s].iter().zip(lp) {
                    next[succ] += p * l.exp();
                }
            }
            out.push(next);
        }
        out
    }

    /// Expected feature counts over the full horizon.
    pub fn expected_feature_counts(&self, env: &Environment) -> Vec<f64> {
        accumulate_features(env, &self.visitation)
    }

    /// Expected feature counts over trajectories of `steps <= horizon` steps.
    pub fn expected_feature_counts_for_steps(&self, env: &Environment, steps: usize) -> Vec<f64> {
        if steps == self.horizon {
            return self.expected_feature_counts(env);
        }
        accumulate_features(env, &self.forward(steps))
    }
}

fn accumulate_features(env: &Environment, visitation: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; env.feature_dim()];
    for dist in visitation {
        for (s, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(env.phi(s)) {
                if b == 1 {
                    *o += p;
                }
            }
        }
    }
    out
}

/// `beta * w . phi(xi) - log Z(start, |xi| - 1)`.
pub fn trajectory_log_likelihood(
    env: &Environment,
    weights: &[f64],
    beta: f64,
    goal: Option<Cell>,
    traj: &Trajectory,
) -> Result<f64> {
    traj.validate(env)?;
    let start = traj.first().expect("validated trajectory is nonempty");
    let dp = SoftDp::compute(env, weights, beta, start, goal, traj.steps())?;
    Ok(score(env, weights, beta, traj)? - dp.log_z())
}

fn score(env: &Environment, weights: &[f64], beta: f64, traj: &Trajectory) -> Result<f64> {
    let phi = feature_count(traj, env)?;
    Ok(beta * weights.iter().zip(&phi).map(|(w, f)| w * f).sum::<f64>())
}

/// Expected feature counts `sum_xi P(xi | w) phi(xi)` over `horizon`-step
/// trajectories from `start`, computed by the forward pass.
pub fn expected_feature_counts(
    env: &Environment,
    weights: &[f64],
    beta: f64,
    start: Cell,
    goal: Option<Cell>,
    horizon: usize,
) -> Result<Vec<f64>> {
    Ok(soft_value_iteration(env, weights, beta, start, goal, horizon)?.expected_feature_counts(env))
}

/// Log-likelihood of a demonstration set: the sum of per-trajectory
/// log-likelihoods, each against a partition of matching length.
///
/// Demonstrations are assumed already validated against `env`.
pub fn demo_log_likelihood(
    env: &Environment,
    demos: &DemonstrationSet,
    weights: &[f64],
    beta: f64,
) -> Result<f64> {
    let dp = SoftDp::compute(env, weights, beta, demos.start, Some(demos.goal), demos.max_steps())?;
    let mut total = 0.0;
    for t in &demos.trajectories {
        total += score(env, weights, beta, t)? - dp.log_z_for_steps(t.steps());
    }
    Ok(total)
}

/// Gradient of [`demo_log_likelihood`] with respect to the weights:
/// `beta * sum_i (phi(xi_i) - E[phi | |xi_i|])`.
pub fn demo_log_likelihood_gradient(
    env: &Environment,
    demos: &DemonstrationSet,
    weights: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    let (empirical, expected) = feature_moments(env, demos, weights, beta)?;
    let n = demos.len() as f64;
    Ok(empirical
        .iter()
        .zip(&expected)
        .map(|(e, x)| beta * n * (e - x))
        .collect())
}

// Mean empirical and mean model feature counts over the demonstrations.
fn feature_moments(
    env: &Environment,
    demos: &DemonstrationSet,
    weights: &[f64],
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let empirical = demos.mean_feature_count(env)?;
    let dp = SoftDp::compute(env, weights, beta, demos.start, Some(demos.goal), demos.max_steps())?;

    let mut lengths: Vec<usize> = demos.trajectories.iter().map(Trajectory::steps).collect();
    lengths.sort_unstable();
    let mut expected = vec![0.0; env.feature_dim()];
    let mut i = 0;
    while i < lengths.len() {
        let steps = lengths[i];
        let mult = lengths[i..].iter().take_while(|&&s| s == steps).count();
        let counts = dp.expected_feature_counts_for_steps(env, steps);
        for (e, c) in expected.iter_mut().zip(counts) {
            *e += mult as f64 * c;
        }
        i += mult;
    }
    let n = demos.len() as f64;
    expected.iter_mut().for_each(|e| *e /= n);
    Ok((empirical, expected))
}

/// Gradient-ascent settings for the MaxEnt IRL baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEntFitConfig {
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for MaxEntFitConfig {
    fn default() -> Self {
        MaxEntFitConfig {
            learning_rate: 0.1,
            iterations: 200,
        }
    }
}

/// MaxEnt IRL baseline: gradient ascent on the demonstration log-likelihood
/// with unit confidence. The step direction is the empirical mean feature
/// count minus the model's expected count.
///
/// Features that never occur in `env` have an exactly zero gradient, so their
/// weights stay at their initial value.
pub fn maxent_irl_fit(
    env: &Environment,
    demos: &DemonstrationSet,
    cfg: MaxEntFitConfig,
    init: &[f64],
) -> Result<RewardVector> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    demos.validate(env)?;
    RewardVector::check(init, env)?;

    let mut w = init.to_vec();
    for iteration in 0..cfg.iterations {
        let (empirical, expected) = feature_moments(env, demos, &w, 1.0)?;
        for ((wi, e), x) in w.iter_mut().zip(&empirical).zip(&expected) {
            *wi += cfg.learning_rate * (e - x);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration });
        }
    }
    Ok(RewardVector(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::EnvironmentFile;

    fn corridor(features: Vec<Vec<u8>>, names: &[&str]) -> Environment {
        Environment::from_file(EnvironmentFile {
            width: features.len(),
            height: 1,
            features: names.iter().map(|s| s.to_string()).collect(),
            cells: features,
            obstacles: vec![],
            discount: 0.9,
            horizon: 8,
        })
        .unwrap()
    }

    #[test]
    fn single_cell_partition_at_zero_beta() {
        let env = corridor(vec![vec![1, 0]], &["a", "b"]);
        for h in 1..5 {
            let dp = soft_value_iteration(&env, &[1.5, -2.0], 0.0, Cell::new(0, 0), None, h).unwrap();
            assert!((dp.log_z() - (h as f64) * 5f64.ln()).abs() < 1e-12);
            for t in 0..=h {
                assert!((dp.visitation(t)[0] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_beta_is_uniform_over_action_sequences() {
        let env = corridor(vec![vec![1, 0], vec![0, 1], vec![1, 0]], &["a", "b"]);
        let traj = Trajectory::new(vec![Cell::new(1, 0), Cell::new(0, 0), Cell::new(0, 0)]);
        let ll = trajectory_log_likelihood(&env, &[2.0, -1.0], 0.0, None, &traj).unwrap();
        assert!((ll + 2.0 * 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn policy_and_visitation_are_normalized() {
        let env = corridor(vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]], &["a", "b"]);
        let dp = soft_value_iteration(&env, &[0.7, -1.3], 0.8, Cell::new(1, 0), Some(Cell::new(3, 0)), 6).unwrap();
        for t in 0..6 {
            for s in 0..4 {
                let total: f64 = dp.action_probs(t, s).iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        for t in 0..=6 {
            assert!((dp.visitation(t).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let env = corridor(vec![vec![1]], &["a"]);
        let s = Cell::new(0, 0);
        assert!(soft_value_iteration(&env, &[1.0], 1.0, s, None, 0).is_err());
        assert!(soft_value_iteration(&env, &[f64::NAN], 1.0, s, None, 2).is_err());
        assert!(soft_value_iteration(&env, &[1.0], -0.1, s, None, 2).is_err());
        assert!(soft_value_iteration(&env, &[1.0, 2.0], 1.0, s, None, 2).is_err());
    }

    #[test]
    fn unreachable_feature_has_zero_expectation() {
        let env = corridor(vec![vec![1, 0, 0], vec![0, 1, 0]], &["a", "b", "c"]);
        let e = expected_feature_counts(&env, &[0.3, -0.2, 1.0], 1.0, Cell::new(0, 0), None, 5).unwrap();
        assert_eq!(e[2], 0.0);
        assert!((e.iter().sum::<f64>() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn identical_feature_counts_give_identical_likelihood() {
        let env = corridor(vec![vec![1, 0], vec![1, 0], vec![1, 0], vec![0, 1]], &["a", "b"]);
        let w = [0.4, -1.0];
        let a = Trajectory::new(vec![Cell::new(1, 0), Cell::new(0, 0), Cell::new(0, 0)]);
        let b = Trajectory::new(vec![Cell::new(1, 0), Cell::new(2, 0), Cell::new(1, 0)]);
        let la = trajectory_log_likelihood(&env, &w, 0.9, None, &a).unwrap();
        let lb = trajectory_log_likelihood(&env, &w, 0.9, None, &b).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn fit_rejects_zero_iterations() {
        let env = corridor(vec![vec![1, 0], vec![0, 1]], &["a", "b"]);
        let demos = DemonstrationSet {
            start: Cell::new(0, 0),
            goal: Cell::new(1, 0),
            trajectories: vec![Trajectory::new(vec![Cell::new(0, 0), Cell::new(1, 0)])],
        };
        let cfg = MaxEntFitConfig {
            learning_rate: 0.1,
            iterations: 0,
        };
        assert!(matches!(
            maxent_irl_fit(&env, &demos, cfg, &[0.0, 0.0]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn fit_reports_divergence() {
        let env = corridor(vec![vec![1, 0], vec![0, 1]], &["a", "b"]);
        let demos = DemonstrationSet {
            start: Cell::new(0, 0),
            goal: Cell::new(1, 0),
            trajectories: vec![Trajectory::new(vec![
                Cell::new(0, 0),
                Cell::new(1, 0),
                Cell::new(1, 0),
                Cell::new(1, 0),
            ])],
        };
        let cfg = MaxEntFitConfig {
            learning_rate: f64::MAX,
            iterations: 5,
        };
        let r = maxent_irl_fit(&env, &demos, cfg, &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }
}
