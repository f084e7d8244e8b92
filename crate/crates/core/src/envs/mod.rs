//! Particle, maze and two-joint reacher environments.
//!
//! All environments are deterministic and value-semantic. States and actions
//! are plain `f64` slices:
//!
//! | env      | state                  | action        |
//! |----------|------------------------|---------------|
//! | particle | `(x, y)`               | `(dx, dy)`    |
//! | maze     | `(x, y)`               | `(dx, dy)`    |
//! | reacher  | `(θ₁, θ₂, ω₁, ω₂)`     | `(τ₁, τ₂)`    |

mod maze;

pub use maze::{MazeLayout, Rect};

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Largest displacement a particle can make in one step.
pub const PARTICLE_MAX_STEP: f64 = 0.05;

/// Reacher integration constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReacherParams {
    pub dt: f64,
    pub omega_max: f64,
    pub action_bound: f64,
}

impl Default for ReacherParams {
    fn default() -> Self {
        Self { dt: 0.05, omega_max: 1.0, action_bound: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Particle,
    Maze,
    Reacher,
}

/// A concrete environment: dynamics, reward, inverse dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum Env {
    Particle,
    Maze(MazeLayout),
    Reacher(ReacherParams),
}

/// One environment step `(s, a, s')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next: Vec<f64>,
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Scales `a` back onto the ball of radius `bound` when it lies outside.
///
/// The small slack keeps an action that was already clipped (and then
/// recovered by inverse dynamics) from being rescaled by rounding noise.
pub fn clip_to_ball(a: [f64; 2], bound: f64) -> [f64; 2] {
    let norm = a[0].hypot(a[1]);
    if norm > bound * (1.0 + 1e-12) {
        let k = bound / norm;
        [a[0] * k, a[1] * k]
    } else {
        a
    }
}

pub fn particle_step(state: [f64; 2], action: [f64; 2]) -> [f64; 2] {
    let a = clip_to_ball(action, PARTICLE_MAX_STEP);
    [(state[0] + a[0]).clamp(-1.0, 1.0), (state[1] + a[1]).clamp(-1.0, 1.0)]
}

/// Like [`particle_step`], but a move whose segment touches a wall (or ends
/// outside the admissible set) is rejected outright.
pub fn maze_step(state: [f64; 2], action: [f64; 2], layout: &MazeLayout) -> Result<[f64; 2]> {
    ensure(layout.admissible(state), || format!("maze state {state:?} is not admissible"))?;
    let next = particle_step(state, action);
    if layout.segment_blocked(state, next) || !layout.admissible(next) {
        Ok(state)
    } else {
        Ok(next)
    }
}

/// Torque-as-acceleration double integrator with clamped joint speed.
pub fn reacher_step(state: [f64; 4], action: [f64; 2], p: &ReacherParams) -> [f64; 4] {
    let mut next = [0.0; 4];
    for j in 0..2 {
        let tau = action[j].clamp(-p.action_bound, p.action_bound);
        let omega = (state[2 + j] + tau * p.dt).clamp(-p.omega_max, p.omega_max);
        next[2 + j] = omega;
        next[j] = wrap_angle(state[j] + omega * p.dt);
    }
    next
}

fn arr2(s: &[f64]) -> [f64; 2] {
    [s[0], s[1]]
}

fn arr4(s: &[f64]) -> [f64; 4] {
    [s[0], s[1], s[2], s[3]]
}

impl Env {
    pub fn kind(&self) -> EnvKind {
        match self {
            Env::Particle => EnvKind::Particle,
            Env::Maze(_) => EnvKind::Maze,
            Env::Reacher(_) => EnvKind::Reacher,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Env::Reacher(_) => 4,
            _ => 2,
        }
    }

    pub fn action_dim(&self) -> usize {
        2
    }

    /// Radius of the action ball (particle, maze) or per-joint torque bound.
    pub fn action_bound(&self) -> f64 {
        match self {
            Env::Reacher(p) => p.action_bound,
            _ => PARTICLE_MAX_STEP,
        }
    }

    pub fn maze(&self) -> Option<&MazeLayout> {
        match self {
            Env::Maze(m) => Some(m),
            _ => None,
        }
    }

    fn check_state(&self, s: &[f64]) -> Result<()> {
        ensure(s.len() == self.state_dim(), || {
            format!("state has dimension {}, {:?} expects {}", s.len(), self.kind(), self.state_dim())
        })
    }

    fn check_action(&self, a: &[f64]) -> Result<()> {
        ensure(a.len() == self.action_dim(), || {
            format!("action has dimension {}, expected {}", a.len(), self.action_dim())
        })?;
        ensure(a.iter().all(|v| v.is_finite()), || "non-finite action".into())
    }

    pub fn step(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.check_state(s)?;
        self.check_action(a)?;
        Ok(match self {
            Env::Particle => particle_step(arr2(s), arr2(a)).to_vec(),
            Env::Maze(m) => maze_step(arr2(s), arr2(a), m)?.to_vec(),
            Env::Reacher(p) => reacher_step(arr4(s), arr2(a), p).to_vec(),
        })
    }

    /// Projects an action onto the admissible set.
    pub fn clip_action(&self, a: &[f64]) -> Vec<f64> {
        match self {
            Env::Reacher(p) => a.iter().map(|v| v.clamp(-p.action_bound, p.action_bound)).collect(),
            _ => clip_to_ball(arr2(a), PARTICLE_MAX_STEP).to_vec(),
        }
    }

    /// Distance between the task-relevant coordinates of `s` and `goal`:
    /// position for particle/maze, wrapped joint angles for the reacher.
    pub fn goal_distance(&self, s: &[f64], goal: &[f64]) -> f64 {
        match self {
            Env::Reacher(_) => wrap_angle(s[0] - goal[0]).hypot(wrap_angle(s[1] - goal[1])),
            _ => (s[0] - goal[0]).hypot(s[1] - goal[1]),
        }
    }

    /// Negative goal distance.
    pub fn reward(&self, s: &[f64], goal: &[f64]) -> f64 {
        -self.goal_distance(s, goal)
    }

    /// Ground-truth action driving `s` toward `desired`. Particle actions are
    /// the raw displacement; stepping clips them.
    pub fn inverse_dynamics(&self, s: &[f64], desired: &[f64]) -> Vec<f64> {
        match self {
            Env::Reacher(p) => (0..2)
                .map(|j| {
                    let omega_des = wrap_angle(desired[j] - s[j]) / p.dt;
                    ((omega_des - s[2 + j]) / p.dt).clamp(-p.action_bound, p.action_bound)
                })
                .collect(),
            _ => vec![desired[0] - s[0], desired[1] - s[1]],
        }
    }

    pub fn is_admissible(&self, s: &[f64]) -> bool {
        match self {
            Env::Particle => s.iter().all(|v| (-1.0..=1.0).contains(v)),
            Env::Maze(m) => m.admissible(arr2(s)),
            Env::Reacher(p) => {
                s[..2].iter().all(|v| *v > -PI && *v <= PI) && s[2..].iter().all(|v| v.abs() <= p.omega_max)
            }
        }
    }

    /// Uniform sample from the admissible action set.
    pub fn random_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Env::Reacher(p) => (0..2).map(|_| rng.gen_range(-p.action_bound..=p.action_bound)).collect(),
            _ => {
                let r = PARTICLE_MAX_STEP * rng.gen::<f64>().sqrt();
                let phi = rng.gen_range(0.0..2.0 * PI);
                vec![r * phi.cos(), r * phi.sin()]
            }
        }
    }

    /// Uniform sample from the admissible state set (rejection sampling in
    /// the maze).
    pub fn random_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Env::Reacher(p) => vec![
                wrap_angle(rng.gen_range(-PI..PI)),
                wrap_angle(rng.gen_range(-PI..PI)),
                rng.gen_range(-p.omega_max..=p.omega_max),
                rng.gen_range(-p.omega_max..=p.omega_max),
            ],
            _ => loop {
                let s = vec![rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
                if self.is_admissible(&s) {
                    return s;
                }
            },
        }
    }

    /// Coordinates used for the occupancy grid.
    pub fn occupancy_coords(&self, s: &[f64]) -> [f64; 2] {
        [s[0], s[1]]
    }

    pub fn occupancy(&self, states: &[Vec<f64>], cell_size: f64) -> usize {
        let pts: Vec<[f64; 2]> = states.iter().map(|s| self.occupancy_coords(s)).collect();
        occupancy(&pts, cell_size)
    }
}

/// Number of distinct `floor(p / cell_size)` grid cells among `points`.
pub fn occupancy(points: &[[f64; 2]], cell_size: f64) -> usize {
    assert!(cell_size > 0.0, "cell_size must be positive");
    points
        .iter()
        .map(|p| ((p[0] / cell_size).floor() as i64, (p[1] / cell_size).floor() as i64))
        .collect::<HashSet<_>>()
        .len()
}

/// Incrementally tracked occupancy.
#[derive(Debug, Clone, Default)]
pub struct OccupancyGrid {
    cell_size: f64,
    cells: HashSet<(i64, i64)>,
}

impl OccupancyGrid {
    pub fn new(cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell_size must be positive");
        Self { cell_size, cells: HashSet::new() }
    }

    pub fn visit(&mut self, p: [f64; 2]) {
        self.cells.insert(((p[0] / self.cell_size).floor() as i64, (p[1] / self.cell_size).floor() as i64));
    }

    pub fn count(&self) -> usize {
        self.cells.len()
    }
}
