//! MPPI in state space. With a zero energy only the goal term is left, so
//! the plan's end state should land on the goal.

use ebm_plan::ebm::EnergyModel;
use ebm_plan::mppi::{plan, PlanTarget, PlannerConfig};
use ebm_plan::nn::MlpShape;
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let model = EnergyModel::zeros(2, &MlpShape::default());
    let config = PlannerConfig { num_samples: 1000, num_iterations: 50, noise_scale: 0.2, ..PlannerConfig::default() };
    let goal = [0.4, -0.3];
    let traj = plan(&model, &[-0.2, 0.1], PlanTarget::Goal(&goal), &config, &mut seeded_rng(0))?;
    for t in 0..traj.len() {
        let s = traj.state_vec(t);
        println!("t={t:<2} ({:+.3}, {:+.3})", s[0], s[1]);
    }
    Ok(())
}
