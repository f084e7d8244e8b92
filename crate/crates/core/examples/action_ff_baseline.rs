//! The action-conditioned baseline: pretrain on random-policy data, then
//! plan over actions toward a goal.

use ebm_plan::baselines::{ff_plan, ActionFfModel};
use ebm_plan::bench::data::{gen_random_dataset, pretrain_ff, PretrainConfig};
use ebm_plan::envs::Env;
use ebm_plan::mppi::PlannerConfig;
use ebm_plan::nn::{Activation, MlpShape};
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let env = Env::Particle;
    let mut rng = seeded_rng(0);
    let data = gen_random_dataset(&env, 5000, 50, &mut rng)?;
    let cfg = PretrainConfig {
        steps: 1000,
        model: MlpShape { hidden: vec![64, 64], activation: Activation::Swish },
        ..PretrainConfig::default()
    };
    let mut model = ActionFfModel::random(2, 2, &cfg.model, &mut rng);
    let losses = pretrain_ff(&mut model, &data, &cfg, &mut rng)?;
    println!("mse {:.2e} -> {:.2e}", losses[0], losses[losses.len() - 1]);

    let planner = PlannerConfig { goal_weight: 100.0, temperature: 1e-3, ..PlannerConfig::default() };
    let (actions, predicted) = ff_plan(&model, &env, &[0.0, 0.0], &[0.3, 0.2], &planner, &mut rng)?;
    let last = predicted.state_vec(predicted.len() - 1);
    println!("{} actions, predicted end state ({:+.3}, {:+.3})", actions.nrows(), last[0], last[1]);
    Ok(())
}
