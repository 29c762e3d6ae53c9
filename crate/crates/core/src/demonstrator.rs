//! Scripted demonstrator: samples trajectories from the same Boltzmann policy
//! the likelihood model assumes.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envmodel::{Action, Cell, DemonstrationSet, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::maxent::{soft_value_iteration, SoftDp};

/// A sampled episode: `states.len() == actions.len() + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub states: Vec<Cell>,
    pub actions: Vec<Action>,
}

/// Samples one episode from `dp`'s policy, stopping at `goal` or at the
/// horizon.
pub fn sample_rollout<R: Rng + ?Sized>(
    dp: &SoftDp,
    env: &Environment,
    goal: Option<Cell>,
    rng: &mut R,
) -> Rollout {
    let mut state = dp.start_index();
    let mut states = vec![env.cell_at(state)];
    let mut actions = Vec::new();
    for t in 0..dp.horizon() {
        if Some(env.cell_at(state)) == goal {
            break;
        }
        let probs = dp.action_probs(t, state);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut choice = Action::Stay;
        for (a, p) in Action::ALL.into_iter().zip(probs) {
            acc += p;
            if u < acc {
                choice = a;
                break;
            }
        }
        state = dp.successor(state, choice);
        actions.push(choice);
        states.push(env.cell_at(state));
    }
    Rollout { states, actions }
}

pub(crate) fn reachable(env: &Environment, start: Cell, goal: Cell) -> bool {
    let mut seen = vec![false; env.num_cells()];
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let Some(i) = env.index_of(c) else { continue };
        if seen[i] || !env.is_open(c) {
            continue;
        }
        seen[i] = true;
        if c == goal {
            return true;
        }
        for a in Action::ALL {
            queue.push_back(env.step(c, a));
        }
    }
    false
}

/// Samples `count` demonstrations from `start` under `true_weights` and
/// confidence `beta`, using the environment horizon. Deterministic in `seed`.
pub fn generate_demos(
    env: &Environment,
    true_weights: &[f64],
    beta: f64,
    count: usize,
    seed: u64,
    start: Cell,
    goal: Cell,
) -> Result<DemonstrationSet> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    if !env.is_open(start) || !env.is_open(goal) {
        return Err(Error::InvalidParameter(format!(
            "start {start} and goal {goal} must be open cells"
        )));
    }
    if !reachable(env, start, goal) {
        return Err(Error::Unreachable { start, goal });
    }
    let dp = soft_value_iteration(env, true_weights, beta, start, Some(goal), env.horizon())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajectories = (0..count)
        .map(|_| Trajectory::new(sample_rollout(&dp, env, Some(goal), &mut rng).states))
        .collect();
    Ok(DemonstrationSet {
        start,
        goal,
        trajectories,
    })
}
