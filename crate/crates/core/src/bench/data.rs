//! Random-policy datasets and offline pretraining.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{random_policy, ActionFfModel};
use crate::ebm::{pad_to_match, EnergyModel, TransitionPair};
use crate::envs::{Env, Transition};
use crate::error::{ensure, Result};
use crate::mppi::{PlanTarget, Planner, PlannerConfig};
use crate::nn::{adam_step, AdamHyper, AdamState, MlpShape};
use crate::trainer::collate;

/// `n` transitions of the random policy, restarting from a uniformly random
/// admissible state every `reset_every` steps.
pub fn gen_random_dataset<R: Rng + ?Sized>(
    env: &Env,
    n: usize,
    reset_every: usize,
    rng: &mut R,
) -> Result<Vec<Transition>> {
    ensure(n >= 1, || "dataset size must be at least 1".into())?;
    ensure(reset_every >= 1, || "reset_every must be at least 1".into())?;
    let mut out = Vec::with_capacity(n);
    let mut s = env.random_state(rng);
    for i in 0..n {
        if i > 0 && i % reset_every == 0 {
            s = env.random_state(rng);
        }
        let a = random_policy(env, rng);
        let next = env.step(&s, &a)?;
        out.push(Transition { state: std::mem::replace(&mut s, next.clone()), action: a, next });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PretrainMode {
    /// Independent uniform minibatches.
    Shuffled,
    /// Consecutive windows of the dataset, each reused for `repeats` updates.
    SequentialRepeated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub dataset_size: usize,
    pub reset_every: usize,
    pub steps: usize,
    pub batch_size: usize,
    /// Updates per window in sequential-repeated mode.
    pub repeats: usize,
    pub mode: PretrainMode,
    pub adam: AdamHyper,
    pub l2_coeff: f64,
    /// Architecture of freshly initialized models.
    pub model: MlpShape,
    /// Planner producing energy-model negatives.
    pub negative_planner: PlannerConfig,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            dataset_size: 20_000,
            reset_every: 50,
            steps: 2_000,
            batch_size: 32,
            repeats: 100,
            mode: PretrainMode::Shuffled,
            adam: AdamHyper::default(),
            l2_coeff: 1.0,
            model: MlpShape::default(),
            negative_planner: PlannerConfig { num_samples: 32, num_iterations: 4, ..PlannerConfig::default() },
        }
    }
}

/// Dataset indices used at update `step`.
pub fn batch_indices<R: Rng + ?Sized>(step: usize, n: usize, cfg: &PretrainConfig, rng: &mut R) -> Vec<usize> {
    match cfg.mode {
        PretrainMode::Shuffled => (0..cfg.batch_size).map(|_| rng.gen_range(0..n)).collect(),
        PretrainMode::SequentialRepeated => {
            let start = (step / cfg.repeats.max(1)) * cfg.batch_size;
            (start..start + cfg.batch_size).map(|i| i % n).collect()
        }
    }
}

/// Trains an energy model offline. Positives are dataset transitions;
/// negatives are transitions of plans from batch states toward random goals
/// under the current model. No replay buffer. Returns per-step losses.
pub fn pretrain_ebm<R: Rng + ?Sized>(
    model: &mut EnergyModel,
    env: &Env,
    data: &[Transition],
    cfg: &PretrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure(!data.is_empty(), || "empty dataset".into())?;
    ensure(cfg.batch_size >= 1, || "batch_size must be at least 1".into())?;
    let planner = Planner::new(cfg.negative_planner.clone(), env.state_dim())?;
    let per_plan = cfg.negative_planner.horizon - 1;
    let plans = cfg.batch_size.div_ceil(per_plan);
    let mut adam = AdamState::new(model.net());
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let idx = batch_indices(step, data.len(), cfg, rng);
        let mut pos: Vec<TransitionPair> =
            idx.iter().map(|&i| TransitionPair { from: data[i].state.clone(), to: data[i].next.clone() }).collect();
        let mut neg = Vec::with_capacity(plans * per_plan);
        for &i in idx.iter().take(plans) {
            let goal = env.random_state(rng);
            let plan = planner.plan(model, &data[i].state, PlanTarget::Goal(&goal), rng)?;
            neg.extend(collate(&plan));
        }
        neg.truncate(pos.len());
        pad_to_match(&mut pos, &mut neg, rng);
        let (loss, grads) = model.contrastive_loss_and_grads(&pos, &neg, cfg.l2_coeff)?;
        adam_step(model.net_mut(), &grads, &mut adam, &cfg.adam)?;
        losses.push(loss);
    }
    Ok(losses)
}

/// Trains an action-conditioned model offline on the MSE.
pub fn pretrain_ff<R: Rng + ?Sized>(
    model: &mut ActionFfModel,
    data: &[Transition],
    cfg: &PretrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure(!data.is_empty(), || "empty dataset".into())?;
    ensure(cfg.batch_size >= 1, || "batch_size must be at least 1".into())?;
    let mut adam = AdamState::new(model.net());
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch: Vec<Transition> =
            batch_indices(step, data.len(), cfg, rng).into_iter().map(|i| data[i].clone()).collect();
        losses.push(model.train_step(&batch, &cfg.adam, &mut adam)?);
    }
    Ok(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::seeded_rng;

    #[test]
    fn dataset_replays_exactly() {
        let env = Env::Maze(crate::envs::MazeLayout::s_corridor());
        let data = gen_random_dataset(&env, 500, 50, &mut seeded_rng(1)).unwrap();
        assert_eq!(data.len(), 500);
        for tr in &data {
            assert_eq!(env.step(&tr.state, &tr.action).unwrap(), tr.next);
        }
        assert_eq!(gen_random_dataset(&Env::Particle, 1, 50, &mut seeded_rng(0)).unwrap().len(), 1);
        assert!(gen_random_dataset(&Env::Particle, 0, 50, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn sequential_batches_walk_in_order() {
        let cfg =
            PretrainConfig { mode: PretrainMode::SequentialRepeated, batch_size: 4, repeats: 3, ..Default::default() };
        let mut rng = seeded_rng(0);
        assert_eq!(batch_indices(0, 10, &cfg, &mut rng), vec![0, 1, 2, 3]);
        assert_eq!(batch_indices(2, 10, &cfg, &mut rng), vec![0, 1, 2, 3]);
        assert_eq!(batch_indices(3, 10, &cfg, &mut rng), vec![4, 5, 6, 7]);
        assert_eq!(batch_indices(6, 10, &cfg, &mut rng), vec![8, 9, 0, 1]);
    }

    #[test]
    fn zero_steps_leave_models_unchanged() {
        let shape = MlpShape { hidden: vec![8], activation: Activation::Tanh };
        let cfg = PretrainConfig { steps: 0, ..Default::default() };
        let data = gen_random_dataset(&Env::Particle, 10, 5, &mut seeded_rng(0)).unwrap();
        let mut ebm = EnergyModel::random(2, &shape, &mut seeded_rng(1));
        let before = ebm.clone();
        pretrain_ebm(&mut ebm, &Env::Particle, &data, &cfg, &mut seeded_rng(2)).unwrap();
        assert_eq!(ebm, before);
        let mut ff = ActionFfModel::random(2, 2, &shape, &mut seeded_rng(1));
        let before = ff.clone();
        pretrain_ff(&mut ff, &data, &cfg, &mut seeded_rng(2)).unwrap();
        assert_eq!(ff, before);
    }
}
