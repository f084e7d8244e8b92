//! Online training of an energy model while acting in an environment.
//!
//! Each step plans with the current model, executes the plan through ground
//! truth inverse dynamics until reality deviates from the plan, and then takes
//! one contrastive Adam step: executed real transitions are positives, the
//! corresponding planned transitions are negatives, both topped up from
//! replay buffers.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ebm::{pad_to_match, EnergyModel, Trajectory, TransitionPair};
use crate::envs::Env;
use crate::error::{ensure, Result};
use crate::mppi::{PlanTarget, Planner, PlannerConfig, ScoreMode};
use crate::nn::{adam_step, AdamHyper, AdamState, MlpShape};

/// Bounded FIFO with uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    entries: VecDeque<T>,
    capacity: usize,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        ensure(capacity > 0, || "replay buffer capacity must be positive".into())?;
        Ok(Self { entries: VecDeque::with_capacity(capacity.min(1 << 16)), capacity })
    }

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, item: T) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(item);
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = T>) {
        for item in items {
            self.push(item);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn oldest(&self) -> Option<&T> {
        self.entries.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter()
    }

    /// `n` uniform draws with replacement; empty when the buffer is empty.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<T> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| self.entries[rng.gen_range(0..self.entries.len())].clone()).collect()
    }
}

/// Consecutive transition pairs of a trajectory, in order.
pub fn collate(traj: &Trajectory) -> Vec<TransitionPair> {
    (0..traj.len() - 1).map(|t| TransitionPair { from: traj.state_vec(t), to: traj.state_vec(t + 1) }).collect()
}

/// Result of running a plan in the real environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    /// Observed states, starting at the plan's first state.
    pub real: Trajectory,
    /// The planned states over the same steps; same length as `real`.
    pub plan_prefix: Trajectory,
    /// Whether execution stopped because of a deviation.
    pub deviated: bool,
}

/// Executes `planned` from `real_start` with ground-truth inverse dynamics.
///
/// Stops after the first step whose outcome lies farther than `threshold`
/// from the planned state; that step is still part of both outputs.
pub fn execute_plan(env: &Env, real_start: &[f64], planned: &Trajectory, threshold: f64) -> Result<Execution> {
    execute_plan_until(env, real_start, planned, threshold, usize::MAX, |_| false)
}

/// [`execute_plan`] with a step cap and an extra stop condition checked on
/// every new real state.
pub fn execute_plan_until(
    env: &Env,
    real_start: &[f64],
    planned: &Trajectory,
    threshold: f64,
    max_steps: usize,
    stop: impl Fn(&[f64]) -> bool,
) -> Result<Execution> {
    ensure(threshold > 0.0, || "deviation threshold must be positive".into())?;
    ensure(max_steps >= 1, || "max_steps must be at least 1".into())?;
    ensure(planned.dim() == env.state_dim(), || "plan dimension does not match environment".into())?;
    ensure(planned.first().iter().zip(real_start).all(|(a, b)| a == b), || {
        "plan does not start at the current real state".into()
    })?;

    let mut real = vec![real_start.to_vec()];
    let mut deviated = false;
    for t in 0..(planned.len() - 1).min(max_steps) {
        let target = planned.state_vec(t + 1);
        let action = env.inverse_dynamics(&real[t], &target);
        let next = env.step(&real[t], &action)?;
        let dev = next.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let done = stop(&next);
        real.push(next);
        if dev > threshold {
            deviated = true;
            break;
        }
        if done {
            break;
        }
    }
    let len = real.len();
    Ok(Execution { real: Trajectory::from_states(&real)?, plan_prefix: planned.prefix(len)?, deviated })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineConfig {
    /// Euclidean state-space distance that ends plan execution.
    pub deviation_threshold: f64,
    /// Replay samples drawn from each buffer per step; 0 draws as many as
    /// there are fresh pairs.
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Total environment transitions.
    pub env_step_budget: usize,
    pub episode_length: usize,
    /// An episode also ends once the goal is this close.
    pub goal_tolerance: f64,
    /// Coefficient on the squared-energy terms of the loss.
    pub l2_coeff: f64,
    pub adam: AdamHyper,
    pub model: MlpShape,
    pub planner: PlannerConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            deviation_threshold: 0.1,
            batch_size: 0,
            buffer_capacity: 10_000,
            env_step_budget: 5_000,
            episode_length: 50,
            goal_tolerance: 0.05,
            l2_coeff: 1.0,
            adam: AdamHyper::default(),
            model: MlpShape::default(),
            planner: PlannerConfig::default(),
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.deviation_threshold > 0.0, || "deviation_threshold must be > 0".into())?;
        ensure(self.buffer_capacity > 0, || "buffer_capacity must be > 0".into())?;
        ensure(self.episode_length > 0, || "episode_length must be > 0".into())?;
        ensure(self.goal_tolerance >= 0.0, || "goal_tolerance must be >= 0".into())?;
        self.adam.validate()?;
        self.planner.validate()
    }
}

/// Episode accounting shared by the online loops.
#[derive(Debug, Clone)]
pub(crate) struct Episodes {
    length: usize,
    tolerance: f64,
    steps: usize,
    score: f64,
    pub(crate) scores: Vec<f64>,
}

impl Episodes {
    pub(crate) fn new(length: usize, tolerance: f64) -> Self {
        Self { length, tolerance, steps: 0, score: 0.0, scores: Vec::new() }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.length - self.steps
    }

    /// Records one transition taken from `state`. Returns true when the
    /// episode ended with this transition.
    pub(crate) fn record(&mut self, env: &Env, state: &[f64], next: &[f64], goal: Option<&[f64]>) -> bool {
        if let Some(g) = goal {
            self.score += env.reward(state, g);
        }
        self.steps += 1;
        let reached = goal.is_some_and(|g| env.goal_distance(next, g) <= self.tolerance);
        if self.steps >= self.length || reached {
            self.scores.push(self.score);
            self.steps = 0;
            self.score = 0.0;
            true
        } else {
            false
        }
    }

    pub(crate) fn index(&self) -> usize {
        self.scores.len()
    }

    pub(crate) fn running_score(&self) -> f64 {
        self.score
    }

    pub(crate) fn reached(&self, env: &Env, s: &[f64], goal: Option<&[f64]>) -> bool {
        goal.is_some_and(|g| env.goal_distance(s, g) <= self.tolerance)
    }
}

/// Per-step training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Environment transitions taken so far, including this step's.
    pub env_steps: usize,
    pub episode: usize,
    pub loss: f64,
    pub executed_len: usize,
    /// Score of the current episode so far (or of the episode that just
    /// ended, when `episode_done`).
    pub episode_score: f64,
    pub episode_done: bool,
}

/// State of an online training run.
#[derive(Debug, Clone)]
pub struct OnlineTrainer {
    env: Env,
    start: Vec<f64>,
    goal: Option<Vec<f64>>,
    config: OnlineConfig,
    planner: Planner,
    model: EnergyModel,
    adam: AdamState,
    positives: ReplayBuffer<TransitionPair>,
    negatives: ReplayBuffer<TransitionPair>,
    state: Vec<f64>,
    env_steps: usize,
    episodes: Episodes,
    visited: Vec<Vec<f64>>,
}

impl OnlineTrainer {
    /// Fresh randomly initialized model. `goal` must be `None` exactly when
    /// the planner runs in prior-only mode.
    pub fn new<R: Rng + ?Sized>(
        env: Env,
        start: Vec<f64>,
        goal: Option<Vec<f64>>,
        config: OnlineConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let model = EnergyModel::random(env.state_dim(), &config.model, rng);
        Self::with_model(env, start, goal, config, model)
    }

    pub fn with_model(
        env: Env,
        start: Vec<f64>,
        goal: Option<Vec<f64>>,
        config: OnlineConfig,
        model: EnergyModel,
    ) -> Result<Self> {
        config.validate()?;
        let d = env.state_dim();
        ensure(model.state_dim() == d, || "model and environment dimensions differ".into())?;
        ensure(start.len() == d && env.is_admissible(&start), || format!("bad start state {start:?}"))?;
        match (&goal, config.planner.score_mode) {
            (None, ScoreMode::PriorOnly) => {}
            (Some(g), ScoreMode::GaussianGoal | ScoreMode::FixedGoal) => {
                ensure(g.len() == d, || "goal dimension does not match environment".into())?
            }
            (_, mode) => {
                return Err(crate::Error::Contract(format!(
                    "score mode {mode:?} is incompatible with the goal setting"
                )))
            }
        }
        let planner = Planner::new(config.planner.clone(), d)?;
        let adam = AdamState::new(model.net());
        Ok(Self {
            positives: ReplayBuffer::new(config.buffer_capacity)?,
            negatives: ReplayBuffer::new(config.buffer_capacity)?,
            episodes: Episodes::new(config.episode_length, config.goal_tolerance),
            visited: vec![start.clone()],
            state: start.clone(),
            env,
            start,
            goal,
            config,
            planner,
            model,
            adam,
            env_steps: 0,
        })
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn into_model(self) -> EnergyModel {
        self.model
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn env_steps(&self) -> usize {
        self.env_steps
    }

    pub fn budget_exhausted(&self) -> bool {
        self.env_steps >= self.config.env_step_budget
    }

    pub fn episode_scores(&self) -> &[f64] {
        &self.episodes.scores
    }

    /// Every real state visited so far, in order (episode resets included).
    pub fn visited(&self) -> &[Vec<f64>] {
        &self.visited
    }

    pub fn buffers(&self) -> (&ReplayBuffer<TransitionPair>, &ReplayBuffer<TransitionPair>) {
        (&self.positives, &self.negatives)
    }

    /// Plan, execute until deviation, take one contrastive step, grow the
    /// buffers.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepMetrics> {
        ensure(!self.budget_exhausted(), || "environment step budget exhausted".into())?;
        let target = match &self.goal {
            Some(g) => PlanTarget::Goal(g),
            None => PlanTarget::Free,
        };
        let planned = self.planner.plan(&self.model, &self.state, target, rng)?;

        let max_steps = self.episodes.remaining().min(self.config.env_step_budget - self.env_steps);
        let goal_owned = self.goal.clone();
        let goal = goal_owned.as_deref();
        let env = &self.env;
        let episodes = &self.episodes;
        let exec = execute_plan_until(env, &self.state, &planned, self.config.deviation_threshold, max_steps, |s| {
            episodes.reached(env, s, goal)
        })?;

        let fresh_pos = collate(&exec.real);
        let fresh_neg = collate(&exec.plan_prefix);
        let loss = self.train_on(&fresh_pos, &fresh_neg, rng)?;
        self.positives.extend(fresh_pos.iter().cloned());
        self.negatives.extend(fresh_neg.iter().cloned());

        let executed = exec.real.len() - 1;
        let mut done = false;
        let mut score = 0.0;
        for t in 0..executed {
            let (s, next) = (exec.real.state_vec(t), exec.real.state_vec(t + 1));
            self.env_steps += 1;
            score = self.episodes.running_score() + goal.map_or(0.0, |g| self.env.reward(&s, g));
            done = self.episodes.record(&self.env, &s, &next, goal);
            self.visited.push(next.clone());
            self.state = next;
            if done {
                // execute_plan_until never runs past an episode boundary
                debug_assert_eq!(t + 1, executed);
            }
        }
        if done {
            self.state = self.start.clone();
            self.visited.push(self.start.clone());
        } else {
            score = self.episodes.running_score();
        }
        Ok(StepMetrics {
            env_steps: self.env_steps,
            episode: if done { self.episodes.index() - 1 } else { self.episodes.index() },
            loss,
            executed_len: executed,
            episode_score: score,
            episode_done: done,
        })
    }

    fn train_on<R: Rng + ?Sized>(
        &mut self,
        fresh_pos: &[TransitionPair],
        fresh_neg: &[TransitionPair],
        rng: &mut R,
    ) -> Result<f64> {
        let k = if self.config.batch_size == 0 { fresh_pos.len() } else { self.config.batch_size };
        let mut pos = fresh_pos.to_vec();
        pos.extend(self.positives.sample(k, rng));
        let mut neg = fresh_neg.to_vec();
        neg.extend(self.negatives.sample(k, rng));
        pad_to_match(&mut pos, &mut neg, rng);
        let (loss, grads) = self.model.contrastive_loss_and_grads(&pos, &neg, self.config.l2_coeff)?;
        adam_step(self.model.net_mut(), &grads, &mut self.adam, &self.config.adam)?;
        Ok(loss)
    }

    /// Steps until the budget is spent.
    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<StepMetrics>> {
        let mut out = Vec::new();
        while !self.budget_exhausted() {
            out.push(self.step(rng)?);
        }
        Ok(out)
    }
}

/// Output of [`online_train`].
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub model: EnergyModel,
    pub episode_scores: Vec<f64>,
    pub metrics: Vec<StepMetrics>,
    pub visited: Vec<Vec<f64>>,
}

/// Trains a fresh model online until `config.env_step_budget` transitions.
pub fn online_train<R: Rng + ?Sized>(
    env: &Env,
    start: &[f64],
    goal: Option<&[f64]>,
    config: &OnlineConfig,
    rng: &mut R,
) -> Result<OnlineRun> {
    let mut trainer = OnlineTrainer::new(env.clone(), start.to_vec(), goal.map(<[f64]>::to_vec), config.clone(), rng)?;
    let metrics = trainer.run(rng)?;
    Ok(OnlineRun {
        episode_scores: trainer.episode_scores().to_vec(),
        visited: trainer.visited().to_vec(),
        model: trainer.into_model(),
        metrics,
    })
}
