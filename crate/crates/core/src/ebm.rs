//! Transition and trajectory energies, goal/reward scores and the contrastive
//! training objective.
//!
//! An [`EnergyModel`] scores a transition `(s, s')` with a scalar network
//! applied to the concatenation `s ‖ s'`. Lower energy means the transition is
//! more plausible. All scores returned here follow the same orientation:
//! lower is better.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{ensure, Result};
use crate::nn::{Mlp, MlpGrads, MlpShape};

/// One observed or imagined state transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPair {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

impl TransitionPair {
    pub fn new(from: Vec<f64>, to: Vec<f64>) -> Result<Self> {
        ensure(from.len() == to.len(), || {
            format!("transition endpoints differ in dimension: {} vs {}", from.len(), to.len())
        })?;
        ensure(from.iter().chain(&to).all(|v| v.is_finite()), || "transition has a non-finite entry".into())?;
        Ok(Self { from, to })
    }

    pub fn dim(&self) -> usize {
        self.from.len()
    }

    /// `from ‖ to`.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dim());
        v.extend_from_slice(&self.from);
        v.extend_from_slice(&self.to);
        v
    }
}

/// Stacks pairs into a `(n, 2·dim)` matrix, one concatenated pair per row.
pub fn pairs_to_matrix(pairs: &[TransitionPair]) -> Result<Array2<f64>> {
    ensure(!pairs.is_empty(), || "empty batch of transitions".into())?;
    let d = pairs[0].dim();
    ensure(pairs.iter().all(|p| p.dim() == d), || "mixed transition dimensions in batch".into())?;
    let mut m = Array2::zeros((pairs.len(), 2 * d));
    for (mut row, p) in m.rows_mut().into_iter().zip(pairs) {
        row.slice_mut(s![..d]).assign(&ArrayView1::from(&p.from[..]));
        row.slice_mut(s![d..]).assign(&ArrayView1::from(&p.to[..]));
    }
    Ok(m)
}

/// An ordered sequence of at least two states, stored as a `(T, dim)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Array2<f64>,
}

impl Trajectory {
    pub fn new(states: Array2<f64>) -> Result<Self> {
        ensure(states.nrows() >= 2, || format!("a trajectory needs at least 2 states, got {}", states.nrows()))?;
        ensure(states.ncols() > 0, || "zero-dimensional states".into())?;
        ensure(states.iter().all(|v| v.is_finite()), || "trajectory has a non-finite entry".into())?;
        Ok(Self { states })
    }

    pub fn from_states(states: &[Vec<f64>]) -> Result<Self> {
        ensure(!states.is_empty(), || "a trajectory needs at least 2 states, got 0".into())?;
        let d = states[0].len();
        ensure(states.iter().all(|s| s.len() == d), || "trajectory states differ in dimension".into())?;
        let flat: Vec<f64> = states.iter().flatten().copied().collect();
        let arr = Array2::from_shape_vec((states.len(), d), flat).expect("shape checked above");
        Self::new(arr)
    }

    /// `len` copies of `state`.
    pub fn constant(state: &[f64], len: usize) -> Result<Self> {
        let row = ArrayView1::from(state);
        let arr = row.broadcast((len, state.len())).expect("broadcast row").to_owned();
        Self::new(arr)
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    /// Always false; a trajectory holds at least two states.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, t: usize) -> ArrayView1<'_, f64> {
        self.states.row(t)
    }

    pub fn state_vec(&self, t: usize) -> Vec<f64> {
        self.states.row(t).to_vec()
    }

    pub fn first(&self) -> ArrayView1<'_, f64> {
        self.states.row(0)
    }

    pub fn last(&self) -> ArrayView1<'_, f64> {
        self.states.row(self.len() - 1)
    }

    pub fn states(&self) -> &Array2<f64> {
        &self.states
    }

    pub fn into_array(self) -> Array2<f64> {
        self.states
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.states.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    /// The first `len` states, `2 <= len <= self.len()`.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        ensure(len >= 2 && len <= self.len(), || format!("prefix length {len} outside [2, {}]", self.len()))?;
        Ok(Self { states: self.states.slice(s![..len, ..]).to_owned() })
    }

    /// Consecutive pairs as a `(T-1, 2·dim)` matrix.
    pub fn pair_matrix(&self) -> Array2<f64> {
        trajectory_pairs(self.states.view())
    }
}

/// Consecutive pairs of a raw `(T, d)` state matrix as `(T-1, 2d)`.
pub(crate) fn trajectory_pairs(states: ArrayView2<'_, f64>) -> Array2<f64> {
    let (t, d) = states.dim();
    let mut m = Array2::zeros((t.saturating_sub(1), 2 * d));
    m.slice_mut(s![.., ..d]).assign(&states.slice(s![..t - 1, ..]));
    m.slice_mut(s![.., d..]).assign(&states.slice(s![1.., ..]));
    m
}

fn sq_dist(a: ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A learned energy over state transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    net: Mlp,
    state_dim: usize,
}

impl EnergyModel {
    pub fn new(net: Mlp, state_dim: usize) -> Result<Self> {
        ensure(state_dim > 0, || "state_dim must be positive".into())?;
        ensure(net.input_dim() == 2 * state_dim, || {
            format!("energy net input {} != 2 * state_dim {}", net.input_dim(), 2 * state_dim)
        })?;
        ensure(net.output_dim() == 1, || format!("energy net must have scalar output, has {}", net.output_dim()))?;
        Ok(Self { net, state_dim })
    }

    pub fn random<R: Rng + ?Sized>(state_dim: usize, shape: &MlpShape, rng: &mut R) -> Self {
        Self { net: Mlp::random(2 * state_dim, shape, 1, rng), state_dim }
    }

    /// Every parameter zero, so every energy is exactly 0.
    pub fn zeros(state_dim: usize, shape: &MlpShape) -> Self {
        Self { net: Mlp::zeros(2 * state_dim, shape, 1), state_dim }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn into_net(self) -> Mlp {
        self.net
    }

    fn check_dim(&self, d: usize, what: &str) -> Result<()> {
        ensure(d == self.state_dim, || format!("{what} has dimension {d}, model state_dim is {}", self.state_dim))
    }

    pub fn energy(&self, from: &[f64], to: &[f64]) -> Result<f64> {
        self.check_dim(from.len(), "transition source")?;
        self.check_dim(to.len(), "transition target")?;
        let mut x = Vec::with_capacity(2 * self.state_dim);
        x.extend_from_slice(from);
        x.extend_from_slice(to);
        Ok(self.net.forward(&x)?[0])
    }

    pub fn transition_energy(&self, pair: &TransitionPair) -> Result<f64> {
        self.energy(&pair.from, &pair.to)
    }

    /// Energies of a `(n, 2·state_dim)` matrix of concatenated pairs.
    pub fn pair_energies(&self, pairs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.net.forward_batch(pairs)?.index_axis_move(Axis(1), 0))
    }

    /// `sum_t E(s_t, s_{t+1})`.
    pub fn trajectory_energy(&self, traj: &Trajectory) -> Result<f64> {
        self.check_dim(traj.dim(), "trajectory")?;
        Ok(self.pair_energies(traj.pair_matrix().view())?.sum())
    }

    /// Trajectory energy plus a quadratic pull of the final state toward `goal`.
    pub fn goal_score(&self, traj: &Trajectory, goal: &[f64], goal_weight: f64) -> Result<f64> {
        self.check_dim(goal.len(), "goal")?;
        ensure(goal_weight >= 0.0, || "goal_weight must be non-negative".into())?;
        Ok(self.trajectory_energy(traj)? + goal_weight * sq_dist(traj.last(), goal))
    }

    /// Trajectory energy plus the energy of one extra transition into `goal`.
    pub fn fixed_goal_score(&self, traj: &Trajectory, goal: &[f64]) -> Result<f64> {
        self.check_dim(goal.len(), "goal")?;
        let last = traj.last().to_vec();
        Ok(self.trajectory_energy(traj)? + self.energy(&last, goal)?)
    }

    /// Negative log of the unnormalized optimality-conditioned trajectory
    /// likelihood: `-(R(s_1) - sum_t (E(s_t, s_{t+1}) - R(s_{t+1})))`.
    pub fn reward_score(&self, traj: &Trajectory, reward: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let energy = self.trajectory_energy(traj)?;
        let rewards: f64 = traj.states().rows().into_iter().map(|r| reward(&r.to_vec())).sum();
        Ok(energy - rewards)
    }

    /// Mean over the batch of `l2·(E(x+)² + E(x-)²) + E(x+) - E(x-)` and its
    /// exact parameter gradient. Batches must be non-empty and equally sized;
    /// see [`pad_to_match`].
    pub fn contrastive_loss_and_grads(
        &self,
        positives: &[TransitionPair],
        negatives: &[TransitionPair],
        l2_coeff: f64,
    ) -> Result<(f64, MlpGrads)> {
        let pos = pairs_to_matrix(positives)?;
        let neg = pairs_to_matrix(negatives)?;
        self.contrastive_loss_and_grads_matrix(pos.view(), neg.view(), l2_coeff)
    }

    /// Matrix form of [`EnergyModel::contrastive_loss_and_grads`].
    pub fn contrastive_loss_and_grads_matrix(
        &self,
        positives: ArrayView2<'_, f64>,
        negatives: ArrayView2<'_, f64>,
        l2_coeff: f64,
    ) -> Result<(f64, MlpGrads)> {
        ensure(positives.nrows() > 0 && negatives.nrows() > 0, || "contrastive batches must be non-empty".into())?;
        ensure(positives.nrows() == negatives.nrows(), || {
            format!("positive ({}) and negative ({}) batch sizes differ", positives.nrows(), negatives.nrows())
        })?;
        let n = positives.nrows();
        let inv_n = 1.0 / n as f64;
        let mut both = Array2::zeros((2 * n, positives.ncols()));
        both.slice_mut(s![..n, ..]).assign(&positives);
        both.slice_mut(s![n.., ..]).assign(&negatives);
        let e = self.pair_energies(both.view())?;

        let mut loss = 0.0;
        let mut cot = Array2::zeros((2 * n, 1));
        for i in 0..n {
            let (ep, en) = (e[i], e[n + i]);
            loss += l2_coeff * (ep * ep + en * en) + ep - en;
            cot[[i, 0]] = (2.0 * l2_coeff * ep + 1.0) * inv_n;
            cot[[n + i, 0]] = (2.0 * l2_coeff * en - 1.0) * inv_n;
        }
        let (grads, _) = self.net.gradients_batch(both.view(), cot.view())?;
        Ok((loss * inv_n, grads))
    }
}

/// Pads the smaller of two batches by sampling (with replacement) from it
/// until both have the same length.
pub fn pad_to_match<R: Rng + ?Sized>(a: &mut Vec<TransitionPair>, b: &mut Vec<TransitionPair>, rng: &mut R) {
    let (small, target) = if a.len() < b.len() { (a, b.len()) } else { (b, a.len()) };
    if small.is_empty() {
        return;
    }
    let base = small.len();
    while small.len() < target {
        let i = rng.gen_range(0..base);
        small.push(small[i].clone());
    }
}
