//! Online training of an energy model in the particle map: plan, execute
//! until the real state drifts from the plan, one contrastive step.

use ebm_plan::envs::Env;
use ebm_plan::mppi::PlannerConfig;
use ebm_plan::nn::{Activation, MlpShape};
use ebm_plan::seeded_rng;
use ebm_plan::trainer::{OnlineConfig, OnlineTrainer};

fn main() -> ebm_plan::Result<()> {
    let config = OnlineConfig {
        batch_size: 32,
        env_step_budget: 1000,
        model: MlpShape { hidden: vec![64, 64], activation: Activation::Swish },
        planner: PlannerConfig { num_samples: 64, num_iterations: 8, goal_weight: 100.0, ..PlannerConfig::default() },
        ..OnlineConfig::default()
    };
    let mut rng = seeded_rng(0);
    let mut trainer = OnlineTrainer::new(Env::Particle, vec![-0.5, -0.5], Some(vec![0.5, 0.5]), config, &mut rng)?;
    while !trainer.budget_exhausted() {
        let m = trainer.step(&mut rng)?;
        if m.episode_done {
            println!("episode {:>2}  score {:>8.3}  loss {:+.4}", m.episode, m.episode_score, m.loss);
        }
    }
    Ok(())
}
