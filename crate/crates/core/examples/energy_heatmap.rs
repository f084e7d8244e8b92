//! Energy of standing still across the particle map for a pretrained model,
//! written as CSV and SVG.

use ebm_plan::bench::data::{gen_random_dataset, pretrain_ebm, PretrainConfig};
use ebm_plan::bench::heatmap::{energy_heatmap, heatmap_svg, matrix_csv};
use ebm_plan::ebm::EnergyModel;
use ebm_plan::envs::Env;
use ebm_plan::mppi::PlannerConfig;
use ebm_plan::nn::{Activation, MlpShape};
use ebm_plan::seeded_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = Env::Particle;
    let mut rng = seeded_rng(0);
    let cfg = PretrainConfig {
        dataset_size: 5000,
        steps: 300,
        model: MlpShape { hidden: vec![64, 64], activation: Activation::Swish },
        negative_planner: PlannerConfig {
            num_samples: 32,
            num_iterations: 4,
            goal_weight: 100.0,
            ..Default::default()
        },
        ..PretrainConfig::default()
    };
    let data = gen_random_dataset(&env, cfg.dataset_size, cfg.reset_every, &mut rng)?;
    let mut model = EnergyModel::random(2, &cfg.model, &mut rng);
    pretrain_ebm(&mut model, &env, &data, &cfg, &mut rng)?;

    let m = energy_heatmap(&model, 30, [0.0, 0.0])?;
    let dir = std::env::temp_dir();
    std::fs::write(dir.join("energy.csv"), matrix_csv(&m))?;
    std::fs::write(dir.join("energy.svg"), heatmap_svg(&m, "E(p, p)"))?;
    println!(
        "energy range [{:.3}, {:.3}], written to {}",
        m.fold(f64::MAX, |a, &b| a.min(b)),
        m.fold(f64::MIN, |a, &b| a.max(b)),
        dir.join("energy.svg").display()
    );
    Ok(())
}
