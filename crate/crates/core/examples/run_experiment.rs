//! Driving an experiment from a config in code, as `ebm-bench` does.

use ebm_plan::bench::cli;
use ebm_plan::bench::config::{ExperimentConfig, ExperimentKind};

fn main() -> ebm_plan::Result<()> {
    let mut cfg = ExperimentConfig::from_toml(
        r#"
        seeds = [0]
        [env]
        kind = "particle"
        [diversity]
        horizons = [5, 10, 20]
        trials = 8
        [pretrain]
        dataset_size = 2000
        steps = 100
        [pretrain.model]
        hidden = [32, 32]
        "#,
    )?;
    cfg.out = std::env::temp_dir().join("ebm-plan-diversity");
    for file in cli::run(ExperimentKind::Diversity, &cfg, false)? {
        println!("wrote {}", file.display());
    }
    Ok(())
}
