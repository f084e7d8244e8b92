//! Fixed-length evaluation episodes with re-planning at every step.

use rand::Rng;

use crate::baselines::{ActionFfModel, FfPlanner};
use crate::ebm::EnergyModel;
use crate::envs::Env;
use crate::error::{ensure, Result};
use crate::mppi::{PlanTarget, Planner, PlannerConfig};

/// A trained model together with the planner that drives it.
#[derive(Debug, Clone)]
pub enum Agent<'a> {
    /// State-space planning; the first planned transition is realized with
    /// ground-truth inverse dynamics.
    Ebm { model: &'a EnergyModel, planner: Planner },
    /// Action-space planning; the first planned action is executed.
    Ff { model: &'a ActionFfModel, planner: FfPlanner },
}

impl<'a> Agent<'a> {
    pub fn ebm(model: &'a EnergyModel, config: &PlannerConfig) -> Result<Self> {
        Ok(Agent::Ebm { model, planner: Planner::new(config.clone(), model.state_dim())? })
    }

    pub fn ff(model: &'a ActionFfModel, config: &PlannerConfig) -> Result<Self> {
        Ok(Agent::Ff { model, planner: FfPlanner::new(config.clone(), model.action_dim())? })
    }

    /// The action to take from `s` toward `goal`.
    pub fn act<R: Rng + ?Sized>(&self, env: &Env, s: &[f64], goal: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Agent::Ebm { model, planner } => {
                let plan = planner.plan(model, s, PlanTarget::Goal(goal), rng)?;
                Ok(env.inverse_dynamics(s, &plan.state_vec(1)))
            }
            Agent::Ff { model, planner } => {
                let (actions, _) = planner.plan(model, env, s, goal, rng)?;
                Ok(actions.row(0).to_vec())
            }
        }
    }
}

/// One episode of `length` steps under `policy`. The score sums the reward
/// of every state an action is taken from, so a stationary agent at the goal
/// scores 0. Returns the score and the visited states (start included).
pub fn run_episode(
    env: &Env,
    start: &[f64],
    goal: &[f64],
    length: usize,
    mut policy: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    ensure(env.is_admissible(start), || format!("start {start:?} is not admissible"))?;
    let mut s = start.to_vec();
    let mut path = vec![s.clone()];
    let mut score = 0.0;
    for _ in 0..length {
        score += env.reward(&s, goal);
        let a = policy(&s)?;
        s = env.step(&s, &a)?;
        path.push(s.clone());
    }
    Ok((score, path))
}

/// Mean episode score of `agent` over `episodes` episodes.
pub fn run_eval<R: Rng + ?Sized>(
    agent: &Agent<'_>,
    env: &Env,
    start: &[f64],
    goal: &[f64],
    length: usize,
    episodes: usize,
    rng: &mut R,
) -> Result<f64> {
    ensure(episodes >= 1, || "need at least one episode".into())?;
    let mut total = 0.0;
    for _ in 0..episodes {
        total += run_episode(env, start, goal, length, |s| agent.act(env, s, goal, rng))?.0;
    }
    Ok(total / episodes as f64)
}
