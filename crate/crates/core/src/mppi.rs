//! Sampling-based trajectory inference.
//!
//! The planner keeps a candidate state trajectory, perturbs it with temporally
//! smooth Gaussian noise, scores every perturbed copy and replaces the
//! candidate with the softmax(-score)-weighted average of the samples.
//!
//! Smooth noise has covariance `scale² (AᵀA)⁻¹` where `A` is the
//! second-difference (acceleration) matrix with the two end-pinning rows
//! dropped, so perturbations are smooth and the end of the trajectory is free
//! to move.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ebm::{EnergyModel, Trajectory};
use crate::error::{ensure, Error, Result};

/// Square `(T, T)` acceleration matrix.
///
/// Row `r` holds the stencil `(1, -2, 1)` ending at column `r`, truncated at
/// the left edge: rows 0 and 1 are the start-pinning rows `(1, 0, ..)` and
/// `(-2, 1, 0, ..)`; the two rows that would pin the end are absent.
pub fn finite_difference_matrix(horizon: usize) -> Result<Array2<f64>> {
    ensure(horizon >= 2, || format!("horizon must be >= 2, got {horizon}"))?;
    let mut a = Array2::zeros((horizon, horizon));
    for r in 0..horizon {
        for (offset, coeff) in [(2usize, 1.0), (1, -2.0), (0, 1.0)] {
            if r >= offset {
                a[[r, r - offset]] = coeff;
            }
        }
    }
    Ok(a)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    ensure(m.ncols() == n, || "cholesky needs a square matrix".into())?;
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = m[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        ensure(diag > 0.0, || format!("matrix is not positive definite (pivot {j})"))?;
        let d = diag.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut v = m[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / d;
        }
    }
    Ok(l)
}

/// Sampler for `(T, d)` perturbations whose columns are independent draws from
/// `N(0, scale² R⁻¹)` with `R = AᵀA`.
#[derive(Debug, Clone)]
pub struct SmoothNoise {
    horizon: usize,
    dim: usize,
    precision: Array2<f64>,
    chol: Array2<f64>,
}

impl SmoothNoise {
    pub fn new(horizon: usize, dim: usize) -> Result<Self> {
        ensure(dim > 0, || "noise dimension must be positive".into())?;
        let a = finite_difference_matrix(horizon)?;
        let precision = a.t().dot(&a);
        let chol = cholesky(precision.view())?;
        Ok(Self { horizon, dim, precision, chol })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R = AᵀA`.
    pub fn precision(&self) -> &Array2<f64> {
        &self.precision
    }

    /// `L` with `L Lᵀ = R`.
    pub fn cholesky_factor(&self) -> &Array2<f64> {
        &self.chol
    }

    /// `R⁻¹`, assembled from the Cholesky factor.
    pub fn covariance(&self) -> Array2<f64> {
        let n = self.horizon;
        let mut cov = Array2::zeros((n, n));
        let mut e = Array1::zeros(n);
        for c in 0..n {
            e.fill(0.0);
            e[c] = 1.0;
            // R x = e  <=>  L y = e, Lᵀ x = y
            let y = self.forward_solve(&e);
            let x = self.back_solve(&y);
            cov.column_mut(c).assign(&x);
        }
        cov
    }

    fn forward_solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.horizon;
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.chol[[i, k]] * y[k];
            }
            y[i] = v / self.chol[[i, i]];
        }
        y
    }

    fn back_solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.horizon;
        let mut x = Array1::zeros(n);
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in i + 1..n {
                v -= self.chol[[k, i]] * x[k];
            }
            x[i] = v / self.chol[[i, i]];
        }
        x
    }

    pub fn sample<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Array2<f64> {
        let mut out = Array2::zeros((self.horizon, self.dim));
        self.sample_into(scale, rng, out.view_mut());
        out
    }

    /// Writes one draw into `out`. If `z ~ N(0, I)` then `scale · L⁻ᵀ z` has
    /// covariance `scale² (L Lᵀ)⁻¹`.
    pub fn sample_into<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R, mut out: ArrayViewMut2<'_, f64>) {
        let mut z = Array1::zeros(self.horizon);
        for c in 0..self.dim {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let x = self.back_solve(&z);
            for (o, v) in out.column_mut(c).iter_mut().zip(x.iter()) {
                *o = scale * v;
            }
        }
    }
}

/// Softmax of negated scores, stabilized by subtracting the minimum.
///
/// Non-finite scores get weight 0. Fails if the input is empty or no score is
/// finite.
pub fn mppi_weights(scores: &[f64]) -> Result<Vec<f64>> {
    ensure(!scores.is_empty(), || "mppi_weights needs at least one score".into())?;
    let min = scores.iter().copied().filter(|s| s.is_finite()).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::AllScoresNonFinite(scores.len()));
    }
    let mut w: Vec<f64> = scores.iter().map(|&s| if s.is_finite() { (-(s - min)).exp() } else { 0.0 }).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// What the sampled trajectories are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Trajectory energy + `goal_weight · ‖s_T - g‖²`.
    GaussianGoal,
    /// Trajectory energy + `E(s_T, g)`.
    FixedGoal,
    /// Trajectory energy - sum of rewards.
    Reward,
    /// Trajectory energy alone; no goal.
    PriorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub num_samples: usize,
    pub num_iterations: usize,
    /// Number of states in a plan, including the start state.
    pub horizon: usize,
    pub noise_scale: f64,
    pub goal_weight: f64,
    /// Scores are divided by this before weighting.
    pub temperature: f64,
    /// Draw perturbations in `±ε` pairs.
    pub antithetic: bool,
    pub score_mode: ScoreMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            num_samples: 200,
            num_iterations: 20,
            horizon: 10,
            noise_scale: 0.005,
            goal_weight: 1.0,
            temperature: 1.0,
            antithetic: true,
            score_mode: ScoreMode::GaussianGoal,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.num_samples >= 1, || "num_samples must be >= 1".into())?;
        ensure(self.horizon >= 2, || "horizon must be >= 2".into())?;
        ensure(self.noise_scale > 0.0, || "noise_scale must be > 0".into())?;
        ensure(self.goal_weight >= 0.0, || "goal_weight must be >= 0".into())?;
        ensure(self.temperature > 0.0, || "temperature must be > 0".into())
    }
}

/// Planning target matching a [`ScoreMode`].
#[derive(Clone, Copy)]
pub enum PlanTarget<'a> {
    Goal(&'a [f64]),
    Reward(&'a dyn Fn(&[f64]) -> f64),
    Free,
}

/// Generic MPPI loop over `(T, d)` sequences.
///
/// `project` is applied to every perturbed sample before scoring (pinning the
/// start state, clipping actions). `score` receives all samples as an
/// `(N, T, d)` array and returns one score per sample.
pub(crate) fn optimize<R, P, S>(
    init: Array2<f64>,
    noise: &SmoothNoise,
    config: &PlannerConfig,
    rng: &mut R,
    mut project: P,
    mut score: S,
) -> Result<Array2<f64>>
where
    R: Rng + ?Sized,
    P: FnMut(ArrayViewMut2<'_, f64>),
    S: FnMut(&Array3<f64>) -> Result<Vec<f64>>,
{
    let (t, d) = init.dim();
    ensure(noise.horizon() == t && noise.dim() == d, || "noise shape does not match sequence".into())?;
    let n = config.num_samples;
    let mut candidate = init;
    let mut samples = Array3::<f64>::zeros((n, t, d));
    let mut eps = Array2::<f64>::zeros((t, d));
    for _ in 0..config.num_iterations {
        let mut i = 0;
        while i < n {
            noise.sample_into(config.noise_scale, rng, eps.view_mut());
            let mut row = samples.index_axis_mut(Axis(0), i);
            row.assign(&candidate);
            row += &eps;
            i += 1;
            if config.antithetic && i < n {
                let mut row = samples.index_axis_mut(Axis(0), i);
                row.assign(&candidate);
                row -= &eps;
                i += 1;
            }
        }
        for sample in samples.outer_iter_mut() {
            project(sample);
        }
        let mut scores = score(&samples)?;
        ensure(scores.len() == n, || "scorer returned the wrong number of scores".into())?;
        for sc in &mut scores {
            *sc /= config.temperature;
        }
        let w = mppi_weights(&scores)?;
        candidate.fill(0.0);
        for (wi, sample) in w.iter().zip(samples.outer_iter()) {
            if *wi > 0.0 {
                candidate.scaled_add(*wi, &sample);
            }
        }
    }
    Ok(candidate)
}

/// Energy-based state-space planner with a cached noise sampler.
#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    noise: SmoothNoise,
}

impl Planner {
    pub fn new(config: PlannerConfig, state_dim: usize) -> Result<Self> {
        config.validate()?;
        let noise = SmoothNoise::new(config.horizon, state_dim)?;
        Ok(Self { config, noise })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Samples a plan from `start`. The returned trajectory has
    /// `config.horizon` states and its first state is exactly `start`.
    pub fn plan<R: Rng + ?Sized>(
        &self,
        model: &EnergyModel,
        start: &[f64],
        target: PlanTarget<'_>,
        rng: &mut R,
    ) -> Result<Trajectory> {
        let d = model.state_dim();
        ensure(start.len() == d, || format!("start has dimension {}, model expects {d}", start.len()))?;
        ensure(self.noise.dim() == d, || "planner was built for a different state dimension".into())?;
        let cfg = &self.config;
        match (cfg.score_mode, &target) {
            (ScoreMode::GaussianGoal | ScoreMode::FixedGoal, PlanTarget::Goal(g)) => {
                ensure(g.len() == d, || format!("goal has dimension {}, model expects {d}", g.len()))?;
            }
            (ScoreMode::Reward, PlanTarget::Reward(_)) | (ScoreMode::PriorOnly, _) => {}
            (mode, _) => return Err(Error::Contract(format!("score mode {mode:?} does not match the plan target"))),
        }

        let t = cfg.horizon;
        let init = Trajectory::constant(start, t)?.into_array();
        let start_row = Array1::from(start.to_vec());
        let project = |mut sample: ArrayViewMut2<'_, f64>| sample.row_mut(0).assign(&start_row);
        let score = |samples: &Array3<f64>| score_samples(model, samples, cfg, target);
        let mut states = optimize(init, &self.noise, cfg, rng, project, score)?;
        // the weighted average can perturb the pinned row by rounding
        states.row_mut(0).assign(&start_row);
        Trajectory::new(states)
    }
}

/// Scores `(N, T, d)` state samples under `config.score_mode`.
fn score_samples(
    model: &EnergyModel,
    samples: &Array3<f64>,
    config: &PlannerConfig,
    target: PlanTarget<'_>,
) -> Result<Vec<f64>> {
    let (n, t, d) = samples.dim();
    let extra = usize::from(config.score_mode == ScoreMode::FixedGoal);
    let per = t - 1 + extra;
    let mut pairs = Array2::zeros((n * per, 2 * d));
    for (i, sample) in samples.outer_iter().enumerate() {
        let mut block = pairs.slice_mut(s![i * per..i * per + t - 1, ..]);
        block.slice_mut(s![.., ..d]).assign(&sample.slice(s![..t - 1, ..]));
        block.slice_mut(s![.., d..]).assign(&sample.slice(s![1.., ..]));
        if extra == 1 {
            if let PlanTarget::Goal(g) = target {
                let mut row = pairs.row_mut(i * per + t - 1);
                row.slice_mut(s![..d]).assign(&sample.row(t - 1));
                row.slice_mut(s![d..]).assign(&ndarray::ArrayView1::from(g));
            }
        }
    }
    let energies = model.pair_energies(pairs.view())?;
    let mut scores = Vec::with_capacity(n);
    for (i, sample) in samples.outer_iter().enumerate() {
        let mut sc = energies.slice(s![i * per..(i + 1) * per]).sum();
        match (config.score_mode, target) {
            (ScoreMode::GaussianGoal, PlanTarget::Goal(g)) => {
                let last = sample.row(t - 1);
                let dist2: f64 = last.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum();
                sc += config.goal_weight * dist2;
            }
            (ScoreMode::Reward, PlanTarget::Reward(r)) => {
                for row in sample.outer_iter() {
                    sc -= r(&row.to_vec());
                }
            }
            _ => {}
        }
        scores.push(sc);
    }
    Ok(scores)
}

/// One-shot convenience wrapper around [`Planner::plan`].
pub fn plan<R: Rng + ?Sized>(
    model: &EnergyModel,
    start: &[f64],
    target: PlanTarget<'_>,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    Planner::new(config.clone(), model.state_dim())?.plan(model, start, target, rng)
}
