//! Experiment runners returning in-memory results; the CLI layer turns these
//! into CSV and SVG files.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::EvalConfig;
use super::data::{gen_random_dataset, pretrain_ebm, pretrain_ff, PretrainConfig, PretrainMode};
use super::eval::{run_eval, Agent};
use crate::baselines::{random_policy, ActionFfModel, FfTrainer};
use crate::ebm::{EnergyModel, Trajectory};
use crate::envs::{Env, MazeLayout, OccupancyGrid};
use crate::error::{ensure, Result};
use crate::mppi::{PlanTarget, Planner, PlannerConfig, ScoreMode};
use crate::trainer::{OnlineConfig, OnlineTrainer, StepMetrics};

/// Output of [`online_train_ff`].
#[derive(Debug, Clone)]
pub struct FfRun {
    pub model: ActionFfModel,
    pub episode_scores: Vec<f64>,
    pub metrics: Vec<StepMetrics>,
    pub visited: Vec<Vec<f64>>,
}

/// Online training of a fresh action-conditioned model.
pub fn online_train_ff<R: Rng + ?Sized>(
    env: &Env,
    start: &[f64],
    goal: &[f64],
    config: &OnlineConfig,
    rng: &mut R,
) -> Result<FfRun> {
    let mut trainer = FfTrainer::new(env.clone(), start.to_vec(), goal.to_vec(), config.clone(), rng)?;
    let metrics = trainer.run(rng)?;
    Ok(FfRun {
        episode_scores: trainer.episode_scores().to_vec(),
        visited: trainer.visited().to_vec(),
        model: trainer.into_model(),
        metrics,
    })
}

/// Mean of the first and of the last quarter of `scores` (at least one
/// element each). `None` for an empty series.
pub fn quartile_means(scores: &[f64]) -> Option<(f64, f64)> {
    if scores.is_empty() {
        return None;
    }
    let k = (scores.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&scores[..k]), mean(&scores[scores.len() - k..])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplorePolicy {
    /// Online energy-model training with goal-free planning.
    EbmPrior,
    Random,
}

impl ExplorePolicy {
    pub fn name(self) -> &'static str {
        match self {
            ExplorePolicy::EbmPrior => "ebm-prior",
            ExplorePolicy::Random => "random",
        }
    }
}

/// Occupancy after each of `budget` steps. Entry `i` counts the cells of
/// the first `i + 1` states acted from, so a budget of 1 gives `[1]`.
///
/// The energy-model policy trains online with `online` (its budget, episode
/// length and score mode are overridden: one episode, prior-only planning).
/// Also returns the trained model, if any.
pub fn run_explore<R: Rng + ?Sized>(
    policy: ExplorePolicy,
    env: &Env,
    start: &[f64],
    budget: usize,
    cell_size: f64,
    online: &OnlineConfig,
    rng: &mut R,
) -> Result<(Vec<usize>, Option<EnergyModel>)> {
    ensure(budget >= 1, || "explore budget must be at least 1".into())?;
    ensure(cell_size > 0.0, || "cell_size must be positive".into())?;
    let (states, model) = match policy {
        ExplorePolicy::Random => {
            ensure(env.is_admissible(start), || format!("start {start:?} is not admissible"))?;
            let mut s = start.to_vec();
            let mut states = Vec::with_capacity(budget);
            for _ in 0..budget {
                let next = env.step(&s, &random_policy(env, rng))?;
                states.push(std::mem::replace(&mut s, next));
            }
            (states, None)
        }
        ExplorePolicy::EbmPrior => {
            let mut cfg = online.clone();
            cfg.env_step_budget = budget;
            cfg.episode_length = budget;
            cfg.planner.score_mode = ScoreMode::PriorOnly;
            let mut trainer = OnlineTrainer::new(env.clone(), start.to_vec(), None, cfg, rng)?;
            trainer.run(rng)?;
            let states = trainer.visited()[..budget].to_vec();
            (states, Some(trainer.into_model()))
        }
    };
    let mut grid = OccupancyGrid::new(cell_size);
    let series = states
        .iter()
        .map(|s| {
            grid.visit(env.occupancy_coords(s));
            grid.count()
        })
        .collect();
    Ok((series, model))
}

/// Mean pairwise Euclidean distance between the midpoint states
/// (index `T / 2`) of equally long trajectories.
pub fn midpoint_spread(trajectories: &[Trajectory]) -> Result<f64> {
    ensure(trajectories.len() >= 2, || "need at least two trajectories".into())?;
    let len = trajectories[0].len();
    ensure(trajectories.iter().all(|t| t.len() == len), || "trajectories differ in length".into())?;
    let mids: Vec<Vec<f64>> = trajectories.iter().map(|t| t.state_vec(len / 2)).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..mids.len() {
        for j in i + 1..mids.len() {
            total += mids[i].iter().zip(&mids[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Midpoint spread of `trials` independent plans from `start` toward `goal`
/// for each horizon in `horizons`.
pub fn run_diversity<R: Rng + ?Sized>(
    model: &EnergyModel,
    start: &[f64],
    goal: &[f64],
    horizons: &[usize],
    trials: usize,
    planner: &PlannerConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure(trials >= 2, || "diversity needs at least two trials".into())?;
    horizons
        .iter()
        .map(|&horizon| {
            let planner = Planner::new(PlannerConfig { horizon, ..planner.clone() }, model.state_dim())?;
            let plans = (0..trials)
                .map(|_| planner.plan(model, start, PlanTarget::Goal(goal), rng))
                .collect::<Result<Vec<_>>>()?;
            midpoint_spread(&plans)
        })
        .collect()
}

/// A random-policy dataset followed by offline training of one model of
/// each kind.
pub fn pretrain_pair<R: Rng + ?Sized>(
    env: &Env,
    cfg: &PretrainConfig,
    rng: &mut R,
) -> Result<(EnergyModel, ActionFfModel)> {
    let data = gen_random_dataset(env, cfg.dataset_size, cfg.reset_every, rng)?;
    let mut ebm = EnergyModel::random(env.state_dim(), &cfg.model, rng);
    let mut ff = ActionFfModel::random(env.state_dim(), env.action_dim(), &cfg.model, rng);
    pretrain_ebm(&mut ebm, env, &data, cfg, rng)?;
    pretrain_ff(&mut ff, &data, cfg, rng)?;
    Ok((ebm, ff))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleScores {
    pub ebm: f64,
    pub ff: f64,
    pub ebm_open: f64,
    pub ff_open: f64,
}

/// Evaluates two models trained in the open particle map, both with and
/// without a square block centred on the origin.
pub fn run_obstacle_gen<R: Rng + ?Sized>(
    ebm: &EnergyModel,
    ff: &ActionFfModel,
    half_width: f64,
    start: &[f64],
    goal: &[f64],
    eval: &EvalConfig,
    rng: &mut R,
) -> Result<ObstacleScores> {
    let blocked = Env::Maze(MazeLayout::central_block(half_width));
    ensure(blocked.is_admissible(start) && blocked.is_admissible(goal), || {
        "start and goal must lie outside the obstacle".into()
    })?;
    let ebm_agent = Agent::ebm(ebm, &eval.planner)?;
    let ff_agent = Agent::ff(ff, &eval.planner)?;
    let score = |agent: &Agent<'_>, env: &Env, rng: &mut R| {
        run_eval(agent, env, start, goal, eval.episode_length, eval.episodes, rng)
    };
    Ok(ObstacleScores {
        ebm: score(&ebm_agent, &blocked, rng)?,
        ff: score(&ff_agent, &blocked, rng)?,
        ebm_open: score(&ebm_agent, &Env::Particle, rng)?,
        ff_open: score(&ff_agent, &Env::Particle, rng)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationScores {
    pub ebm_shuffled: f64,
    pub ebm_sequential: f64,
    pub ff_shuffled: f64,
    pub ff_sequential: f64,
}

impl AblationScores {
    /// Score lost by switching to sequential-repeated batches.
    pub fn drops(&self) -> (f64, f64) {
        (self.ebm_shuffled - self.ebm_sequential, self.ff_shuffled - self.ff_sequential)
    }
}

/// Pretrains both model kinds on one dataset under both batching modes and
/// evaluates all four.
pub fn run_ablation<R: Rng + ?Sized>(
    env: &Env,
    pretrain: &PretrainConfig,
    start: &[f64],
    goal: &[f64],
    eval: &EvalConfig,
    rng: &mut R,
) -> Result<AblationScores> {
    let data = gen_random_dataset(env, pretrain.dataset_size, pretrain.reset_every, rng)?;
    let ebm_init = EnergyModel::random(env.state_dim(), &pretrain.model, rng);
    let ff_init = ActionFfModel::random(env.state_dim(), env.action_dim(), &pretrain.model, rng);
    let mut scores = [0.0; 4];
    for (i, mode) in [PretrainMode::Shuffled, PretrainMode::SequentialRepeated].into_iter().enumerate() {
        let cfg = PretrainConfig { mode, ..pretrain.clone() };
        let mut ebm = ebm_init.clone();
        pretrain_ebm(&mut ebm, env, &data, &cfg, rng)?;
        let mut ff = ff_init.clone();
        pretrain_ff(&mut ff, &data, &cfg, rng)?;
        scores[i] =
            run_eval(&Agent::ebm(&ebm, &eval.planner)?, env, start, goal, eval.episode_length, eval.episodes, rng)?;
        scores[2 + i] =
            run_eval(&Agent::ff(&ff, &eval.planner)?, env, start, goal, eval.episode_length, eval.episodes, rng)?;
    }
    Ok(AblationScores {
        ebm_shuffled: scores[0],
        ebm_sequential: scores[1],
        ff_shuffled: scores[2],
        ff_sequential: scores[3],
    })
}
