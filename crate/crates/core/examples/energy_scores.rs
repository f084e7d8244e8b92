//! The scores the planner minimizes, on one hand-made trajectory.

use ebm_plan::ebm::{EnergyModel, Trajectory};
use ebm_plan::nn::MlpShape;
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let model = EnergyModel::random(2, &MlpShape::default(), &mut seeded_rng(1));
    let states: Vec<Vec<f64>> = (0..6).map(|t| vec![0.05 * t as f64, 0.0]).collect();
    let traj = Trajectory::from_states(&states)?;
    let goal = [0.5, 0.0];

    println!("E(s0, s1)          {:+.4}", model.energy(&states[0], &states[1])?);
    println!("trajectory energy  {:+.4}", model.trajectory_energy(&traj)?);
    println!("goal score (w=100) {:+.4}", model.goal_score(&traj, &goal, 100.0)?);
    println!("fixed-goal score   {:+.4}", model.fixed_goal_score(&traj, &goal)?);
    let reward = |s: &[f64]| -(s[0] - goal[0]).hypot(s[1] - goal[1]);
    println!("reward score       {:+.4}", model.reward_score(&traj, &reward)?);
    Ok(())
}
