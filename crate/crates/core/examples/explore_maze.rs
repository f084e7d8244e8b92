//! Goal-free exploration in the maze against a random policy.

use ebm_plan::bench::config::ExperimentConfig;
use ebm_plan::bench::experiments::{run_explore, ExplorePolicy};
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/explore-maze.toml"))?;
    let env = cfg.env.build()?;
    for policy in [ExplorePolicy::EbmPrior, ExplorePolicy::Random] {
        let (series, _) =
            run_explore(policy, &env, &cfg.env.start, 1000, cfg.explore.cell_size, &cfg.online, &mut seeded_rng(0))?;
        let marks: Vec<String> = [99, 249, 499, 999].iter().map(|&i| series[i].to_string()).collect();
        println!("{:<9} occupancy at 100/250/500/1000 steps: {}", policy.name(), marks.join("/"));
    }
    Ok(())
}
