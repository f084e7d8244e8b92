//! Comparison agents: an action-conditioned feed-forward dynamics model
//! planned with MPPI over actions, a uniform random policy, and a recursive
//! least squares inverse dynamics model.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayViewMut2, Axis};
use rand::Rng;

use crate::ebm::Trajectory;
use crate::envs::{Env, Transition};
use crate::error::{ensure, Result};
use crate::mppi::{optimize, PlannerConfig, SmoothNoise};
use crate::nn::{adam_step, AdamHyper, AdamState, Mlp, MlpGrads, MlpShape};
use crate::trainer::{Episodes, OnlineConfig, ReplayBuffer, StepMetrics};

/// Deterministic next-state predictor `f(s ‖ a) -> s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionFfModel {
    net: Mlp,
    state_dim: usize,
    action_dim: usize,
}

impl ActionFfModel {
    pub fn new(net: Mlp, state_dim: usize, action_dim: usize) -> Result<Self> {
        ensure(net.input_dim() == state_dim + action_dim, || {
            format!("network input {} != {state_dim} + {action_dim}", net.input_dim())
        })?;
        ensure(net.output_dim() == state_dim, || {
            format!("network output {} != state_dim {state_dim}", net.output_dim())
        })?;
        Ok(Self { net, state_dim, action_dim })
    }

    pub fn random<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, shape: &MlpShape, rng: &mut R) -> Self {
        let net = Mlp::random(state_dim + action_dim, shape, state_dim, rng);
        Self { net, state_dim, action_dim }
    }

    pub fn zeros(state_dim: usize, action_dim: usize, shape: &MlpShape) -> Self {
        Self { net: Mlp::zeros(state_dim + action_dim, shape, state_dim), state_dim, action_dim }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn into_net(self) -> Mlp {
        self.net
    }

    pub fn predict(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        ensure(s.len() == self.state_dim && a.len() == self.action_dim, || {
            format!(
                "got state {} / action {}, model expects {} / {}",
                s.len(),
                a.len(),
                self.state_dim,
                self.action_dim
            )
        })?;
        let input: Vec<f64> = s.iter().chain(a).copied().collect();
        self.net.forward(&input)
    }

    /// Predicted states `s_0 = start, s_{t+1} = f(s_t, a_t)`.
    pub fn rollout(&self, start: &[f64], actions: &Array2<f64>) -> Result<Trajectory> {
        let mut states = vec![start.to_vec()];
        for a in actions.outer_iter() {
            let next = self.predict(states.last().unwrap(), a.as_slice().unwrap())?;
            states.push(next);
        }
        Trajectory::from_states(&states)
    }

    /// Final predicted state of each `(N, T-1, action_dim)` action sequence.
    fn rollout_final_batch(&self, start: &[f64], actions: &Array3<f64>) -> Result<Array2<f64>> {
        let (n, steps, _) = actions.dim();
        let (sd, ad) = (self.state_dim, self.action_dim);
        let mut states = Array2::zeros((n, sd));
        for mut row in states.outer_iter_mut() {
            row.assign(&ArrayView1::from(start));
        }
        let mut input = Array2::zeros((n, sd + ad));
        for t in 0..steps {
            input.slice_mut(s![.., ..sd]).assign(&states);
            input.slice_mut(s![.., sd..]).assign(&actions.index_axis(Axis(1), t));
            states = self.net.forward_batch(input.view())?;
        }
        Ok(states)
    }

    /// Mean squared prediction error over all batch entries and state
    /// coordinates, with its parameter gradient.
    pub fn loss_and_grads(&self, batch: &[Transition]) -> Result<(f64, MlpGrads)> {
        ensure(!batch.is_empty(), || "empty training batch".into())?;
        let (sd, ad) = (self.state_dim, self.action_dim);
        let n = batch.len();
        let mut inputs = Array2::zeros((n, sd + ad));
        let mut targets = Array2::zeros((n, sd));
        for (i, tr) in batch.iter().enumerate() {
            ensure(tr.state.len() == sd && tr.action.len() == ad && tr.next.len() == sd, || {
                "transition dimensions do not match the model".into()
            })?;
            let mut row = inputs.row_mut(i);
            row.slice_mut(s![..sd]).assign(&ArrayView1::from(&tr.state[..]));
            row.slice_mut(s![sd..]).assign(&ArrayView1::from(&tr.action[..]));
            targets.row_mut(i).assign(&ArrayView1::from(&tr.next[..]));
        }
        let diff = self.net.forward_batch(inputs.view())? - &targets;
        let denom = (n * sd) as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / denom;
        let cot = diff * (2.0 / denom);
        let (grads, _) = self.net.gradients_batch(inputs.view(), cot.view())?;
        Ok((loss, grads))
    }

    /// One Adam step on the MSE; returns the pre-step loss.
    pub fn train_step(&mut self, batch: &[Transition], hyper: &AdamHyper, adam: &mut AdamState) -> Result<f64> {
        let (loss, grads) = self.loss_and_grads(batch)?;
        adam_step(&mut self.net, &grads, adam, hyper)?;
        Ok(loss)
    }
}

/// MPPI over action sequences with a cached smooth-noise sampler.
///
/// `config.horizon` counts states, so a plan has `horizon - 1` actions.
#[derive(Debug, Clone)]
pub struct FfPlanner {
    config: PlannerConfig,
    noise: SmoothNoise,
}

impl FfPlanner {
    pub fn new(config: PlannerConfig, action_dim: usize) -> Result<Self> {
        config.validate()?;
        ensure(config.horizon >= 3, || "action-space planning needs a horizon of at least 3".into())?;
        let noise = SmoothNoise::new(config.horizon - 1, action_dim)?;
        Ok(Self { config, noise })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Returns the action sequence and its predicted rollout from `start`,
    /// minimizing `goal_weight·‖ŝ_T - goal‖²`.
    pub fn plan<R: Rng + ?Sized>(
        &self,
        model: &ActionFfModel,
        env: &Env,
        start: &[f64],
        goal: &[f64],
        rng: &mut R,
    ) -> Result<(Array2<f64>, Trajectory)> {
        let sd = model.state_dim();
        ensure(start.len() == sd && goal.len() == sd, || "start/goal dimension does not match model".into())?;
        ensure(env.action_dim() == model.action_dim(), || "model and environment action dims differ".into())?;
        ensure(self.noise.dim() == model.action_dim(), || "planner was built for a different action dim".into())?;
        let init = Array2::zeros((self.config.horizon - 1, model.action_dim()));
        let project = |mut seq: ArrayViewMut2<'_, f64>| {
            for mut a in seq.outer_iter_mut() {
                let clipped = env.clip_action(a.as_slice().unwrap());
                a.assign(&Array1::from(clipped));
            }
        };
        let goal_row = ArrayView1::from(goal);
        let w = self.config.goal_weight;
        let score = |samples: &Array3<f64>| -> Result<Vec<f64>> {
            let finals = model.rollout_final_batch(start, samples)?;
            Ok(finals
                .outer_iter()
                .map(|f| w * f.iter().zip(goal_row.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .collect())
        };
        let mut actions = optimize(init, &self.noise, &self.config, rng, project, score)?;
        // averaging clipped actions stays in the convex action set up to rounding
        for mut a in actions.outer_iter_mut() {
            let clipped = env.clip_action(a.as_slice().unwrap());
            a.assign(&Array1::from(clipped));
        }
        let predicted = model.rollout(start, &actions)?;
        Ok((actions, predicted))
    }
}

/// Convenience wrapper building a one-off [`FfPlanner`].
pub fn ff_plan<R: Rng + ?Sized>(
    model: &ActionFfModel,
    env: &Env,
    start: &[f64],
    goal: &[f64],
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<(Array2<f64>, Trajectory)> {
    FfPlanner::new(config.clone(), model.action_dim())?.plan(model, env, start, goal, rng)
}

/// Uniform sample from the environment's action set.
pub fn random_policy<R: Rng + ?Sized>(env: &Env, rng: &mut R) -> Vec<f64> {
    env.random_action(rng)
}

/// Online training of an [`ActionFfModel`] with the same loop structure as
/// the energy-model trainer: plan, execute the planned actions until the real
/// state leaves the predicted one by more than the deviation threshold, one
/// Adam step on fresh plus replayed transitions.
#[derive(Debug, Clone)]
pub struct FfTrainer {
    env: Env,
    start: Vec<f64>,
    goal: Vec<f64>,
    config: OnlineConfig,
    planner: FfPlanner,
    model: ActionFfModel,
    adam: AdamState,
    buffer: ReplayBuffer<Transition>,
    state: Vec<f64>,
    env_steps: usize,
    episodes: Episodes,
    visited: Vec<Vec<f64>>,
}

impl FfTrainer {
    pub fn new<R: Rng + ?Sized>(
        env: Env,
        start: Vec<f64>,
        goal: Vec<f64>,
        config: OnlineConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let model = ActionFfModel::random(env.state_dim(), env.action_dim(), &config.model, rng);
        Self::with_model(env, start, goal, config, model)
    }

    pub fn with_model(
        env: Env,
        start: Vec<f64>,
        goal: Vec<f64>,
        config: OnlineConfig,
        model: ActionFfModel,
    ) -> Result<Self> {
        config.validate()?;
        let d = env.state_dim();
        ensure(model.state_dim() == d && model.action_dim() == env.action_dim(), || {
            "model and environment dimensions differ".into()
        })?;
        ensure(start.len() == d && env.is_admissible(&start), || format!("bad start state {start:?}"))?;
        ensure(goal.len() == d, || "goal dimension does not match environment".into())?;
        let planner = FfPlanner::new(config.planner.clone(), env.action_dim())?;
        Ok(Self {
            adam: AdamState::new(model.net()),
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            episodes: Episodes::new(config.episode_length, config.goal_tolerance),
            visited: vec![start.clone()],
            state: start.clone(),
            env,
            start,
            goal,
            config,
            planner,
            model,
            env_steps: 0,
        })
    }

    pub fn model(&self) -> &ActionFfModel {
        &self.model
    }

    pub fn into_model(self) -> ActionFfModel {
        self.model
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

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepMetrics> {
        ensure(!self.budget_exhausted(), || "environment step budget exhausted".into())?;
        let (actions, predicted) = self.planner.plan(&self.model, &self.env, &self.state, &self.goal, rng)?;
        let max_steps = self.episodes.remaining().min(self.config.env_step_budget - self.env_steps);

        let mut fresh = Vec::new();
        let mut done = false;
        let mut score = 0.0;
        for (t, a) in actions.outer_iter().enumerate().take(max_steps) {
            let a = a.to_vec();
            let next = self.env.step(&self.state, &a)?;
            let dev =
                next.iter().zip(predicted.state(t + 1).iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            self.env_steps += 1;
            score = self.episodes.running_score() + self.env.reward(&self.state, &self.goal);
            done = self.episodes.record(&self.env, &self.state, &next, Some(&self.goal));
            self.visited.push(next.clone());
            fresh.push(Transition { state: std::mem::replace(&mut self.state, next.clone()), action: a, next });
            if done || dev > self.config.deviation_threshold {
                break;
            }
        }
        if done {
            self.state = self.start.clone();
            self.visited.push(self.start.clone());
        } else {
            score = self.episodes.running_score();
        }

        let k = if self.config.batch_size == 0 { fresh.len() } else { self.config.batch_size };
        let mut batch = fresh.clone();
        batch.extend(self.buffer.sample(k, rng));
        let loss = self.model.train_step(&batch, &self.config.adam, &mut self.adam)?;
        self.buffer.extend(fresh.iter().cloned());

        Ok(StepMetrics {
            env_steps: self.env_steps,
            episode: if done { self.episodes.index() - 1 } else { self.episodes.index() },
            loss,
            executed_len: fresh.len(),
            episode_score: score,
            episode_done: done,
        })
    }

    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<StepMetrics>> {
        let mut out = Vec::new();
        while !self.budget_exhausted() {
            out.push(self.step(rng)?);
        }
        Ok(out)
    }
}

/// Recursive least squares fit of `a ≈ W·(s ‖ s' ‖ 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    w: Array2<f64>,
    p: Array2<f64>,
    forgetting: f64,
    state_dim: usize,
}

impl RlsState {
    pub const DEFAULT_P0: f64 = 1e3;

    /// `W = 0`, `P = p0·I`, forgetting factor 1.
    pub fn new(state_dim: usize, action_dim: usize) -> Self {
        Self::with_prior(state_dim, action_dim, Self::DEFAULT_P0, 1.0).expect("default prior is valid")
    }

    pub fn with_prior(state_dim: usize, action_dim: usize, p0: f64, forgetting: f64) -> Result<Self> {
        ensure(p0 > 0.0 && p0.is_finite(), || "p0 must be positive".into())?;
        ensure(forgetting > 0.0 && forgetting <= 1.0, || "forgetting factor must lie in (0, 1]".into())?;
        let f = 2 * state_dim + 1;
        Ok(Self { w: Array2::zeros((action_dim, f)), p: Array2::eye(f) * p0, forgetting, state_dim })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn covariance(&self) -> &Array2<f64> {
        &self.p
    }

    fn features(&self, s: &[f64], next: &[f64]) -> Result<Array1<f64>> {
        ensure(s.len() == self.state_dim && next.len() == self.state_dim, || {
            "state dimension does not match the RLS model".into()
        })?;
        Ok(s.iter().chain(next).copied().chain(std::iter::once(1.0)).collect())
    }

    pub fn update(&mut self, s: &[f64], next: &[f64], a: &[f64]) -> Result<()> {
        ensure(a.len() == self.w.nrows(), || "action dimension does not match the RLS model".into())?;
        let phi = self.features(s, next)?;
        let p_phi = self.p.dot(&phi);
        let denom = self.forgetting + phi.dot(&p_phi);
        let gain = &p_phi / denom;
        let err = Array1::from(a.to_vec()) - self.w.dot(&phi);
        let (e_col, g_row) = (err.insert_axis(Axis(1)), gain.view().insert_axis(Axis(0)));
        self.w += &e_col.dot(&g_row);
        let p_col = p_phi.insert_axis(Axis(1));
        self.p -= &p_col.dot(&g_row);
        self.p /= self.forgetting;
        // keep P exactly symmetric
        let sym = (&self.p + &self.p.t()) * 0.5;
        self.p = sym;
        Ok(())
    }

    pub fn infer(&self, s: &[f64], next: &[f64]) -> Result<Vec<f64>> {
        Ok(self.w.dot(&self.features(s, next)?).to_vec())
    }
}

pub fn rls_update(state: &mut RlsState, s: &[f64], next: &[f64], a: &[f64]) -> Result<()> {
    state.update(s, next, a)
}

pub fn rls_infer(state: &RlsState, s: &[f64], next: &[f64]) -> Result<Vec<f64>> {
    state.infer(s, next)
}

/// Exactly `s' = s + a` as a single linear layer.
pub fn exact_linear_model(state_dim: usize) -> ActionFfModel {
    use crate::nn::{Activation, Dense};
    let mut weights = Array2::zeros((state_dim, 2 * state_dim));
    for i in 0..state_dim {
        weights[[i, i]] = 1.0;
        weights[[i, state_dim + i]] = 1.0;
    }
    let layer = Dense { weights, bias: Array1::zeros(state_dim), activation: Activation::Identity };
    ActionFfModel::new(Mlp::new(vec![layer]).expect("finite"), state_dim, state_dim).expect("dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::seeded_rng;

    fn small() -> MlpShape {
        MlpShape { hidden: vec![8, 8], activation: Activation::Tanh }
    }

    #[test]
    fn zero_model_predicts_zero() {
        let m = ActionFfModel::zeros(2, 2, &small());
        assert_eq!(m.predict(&[0.3, -0.1], &[0.01, 0.02]).unwrap(), vec![0.0, 0.0]);
        assert!(m.predict(&[0.3], &[0.01, 0.02]).is_err());
    }

    #[test]
    fn predict_is_forward_on_concat() {
        let m = ActionFfModel::random(2, 2, &small(), &mut seeded_rng(4));
        let out = m.predict(&[0.3, -0.1], &[0.01, 0.02]).unwrap();
        assert_eq!(out, m.net().forward(&[0.3, -0.1, 0.01, 0.02]).unwrap());
    }

    #[test]
    fn exact_model_has_zero_loss() {
        let m = exact_linear_model(2);
        let batch = vec![
            Transition { state: vec![0.1, 0.2], action: vec![0.01, -0.02], next: vec![0.1 + 0.01, 0.2 - 0.02] },
            Transition { state: vec![-0.5, 0.0], action: vec![0.03, 0.0], next: vec![-0.5 + 0.03, 0.0] },
        ];
        let (loss, grads) = m.loss_and_grads(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
        assert!(m.loss_and_grads(&[]).is_err());
    }

    #[test]
    fn no_iterations_gives_zero_actions_and_their_rollout() {
        let cfg = PlannerConfig { num_iterations: 0, horizon: 5, ..PlannerConfig::default() };
        let m = exact_linear_model(2);
        let (acts, pred) = ff_plan(&m, &Env::Particle, &[0.1, 0.1], &[0.5, 0.5], &cfg, &mut seeded_rng(0)).unwrap();
        assert!(acts.iter().all(|&a| a == 0.0));
        assert_eq!(pred, Trajectory::constant(&[0.1, 0.1], 5).unwrap());
    }

    #[test]
    fn predicted_trajectory_is_rollout_of_actions() {
        let cfg = PlannerConfig { num_samples: 16, num_iterations: 3, horizon: 6, ..PlannerConfig::default() };
        let m = ActionFfModel::random(2, 2, &small(), &mut seeded_rng(9));
        let (acts, pred) = ff_plan(&m, &Env::Particle, &[0.1, 0.1], &[0.5, 0.5], &cfg, &mut seeded_rng(1)).unwrap();
        assert_eq!(pred, m.rollout(&[0.1, 0.1], &acts).unwrap());
        for a in acts.outer_iter() {
            assert!(a.dot(&a).sqrt() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn ground_truth_model_reaches_nearby_goal() {
        let cfg = PlannerConfig {
            num_samples: 200,
            num_iterations: 30,
            horizon: 10,
            noise_scale: 0.01,
            temperature: 1e-3,
            ..PlannerConfig::default()
        };
        let m = exact_linear_model(2);
        for seed in 0..4 {
            let (_, pred) = ff_plan(&m, &Env::Particle, &[0.0, 0.0], &[0.2, 0.0], &cfg, &mut seeded_rng(seed)).unwrap();
            let last = pred.last();
            assert!((last[0] - 0.2).hypot(last[1]) < 0.05, "seed {seed}: {last}");
        }
    }

    #[test]
    fn random_policy_respects_bounds() {
        let mut rng = seeded_rng(0);
        for _ in 0..1000 {
            let a = random_policy(&Env::Particle, &mut rng);
            assert!(a[0].hypot(a[1]) <= 0.05);
        }
        let a = random_policy(&Env::Particle, &mut seeded_rng(3));
        assert_eq!(a, random_policy(&Env::Particle, &mut seeded_rng(3)));
    }

    #[test]
    fn rls_prior_and_recovery() {
        let rls = RlsState::new(2, 2);
        assert_eq!(rls.infer(&[0.3, 0.1], &[0.2, 0.2]).unwrap(), vec![0.0, 0.0]);

        // a weak prior makes the ridge bias negligible
        let mut rls = RlsState::with_prior(2, 2, 1e8, 1.0).unwrap();
        let mut rng = seeded_rng(11);
        for _ in 0..100 {
            let s = Env::Particle.random_state(&mut rng);
            let a = random_policy(&Env::Particle, &mut rng);
            let next: Vec<f64> = s.iter().zip(&a).map(|(x, d)| x + d).collect();
            rls.update(&s, &next, &a).unwrap();
        }
        let (s, next) = ([0.2, -0.4], [0.23, -0.42]);
        let a = rls.infer(&s, &next).unwrap();
        assert!((a[0] - 0.03).abs() < 1e-6 && (a[1] + 0.02).abs() < 1e-6, "{a:?}");
    }

    #[test]
    fn ff_trainer_is_deterministic() {
        let cfg = OnlineConfig {
            env_step_budget: 40,
            episode_length: 20,
            model: small(),
            planner: PlannerConfig { num_samples: 16, num_iterations: 2, horizon: 6, ..PlannerConfig::default() },
            ..OnlineConfig::default()
        };
        let run = |seed| {
            let mut rng = seeded_rng(seed);
            let mut tr = FfTrainer::new(Env::Particle, vec![0.0, 0.0], vec![0.3, 0.0], cfg.clone(), &mut rng).unwrap();
            (tr.run(&mut rng).unwrap(), tr.into_model())
        };
        let (a, b) = (run(2), run(2));
        assert_eq!(a, b);
        assert_eq!(a.0.last().unwrap().env_steps, 40);
    }
}
