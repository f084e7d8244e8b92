//! Draws of the temporally smooth perturbation used by the planner, and how
//! their spread grows along the horizon.

use ebm_plan::mppi::SmoothNoise;
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let noise = SmoothNoise::new(12, 1)?;
    let mut rng = seeded_rng(3);
    for k in 0..3 {
        let x = noise.sample(0.05, &mut rng);
        let row: Vec<String> = x.column(0).iter().map(|v| format!("{v:+.3}")).collect();
        println!("draw {k}: {}", row.join(" "));
    }
    let cov = noise.covariance();
    let std: Vec<String> = (0..12).map(|t| format!("{:.3}", 0.05 * cov[[t, t]].sqrt())).collect();
    println!("std by step: {}", std.join(" "));
    Ok(())
}
