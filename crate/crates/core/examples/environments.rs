//! One step in each environment, its inverse dynamics and the occupancy
//! metric of a random walk.

use ebm_plan::baselines::random_policy;
use ebm_plan::envs::{Env, MazeLayout, ReacherParams};
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let mut rng = seeded_rng(0);
    let envs = [
        (Env::Particle, vec![0.0, 0.0]),
        (Env::Maze(MazeLayout::s_corridor()), vec![-0.75, -0.75]),
        (Env::Reacher(ReacherParams::default()), vec![0.0; 4]),
    ];
    for (env, start) in envs {
        let a = random_policy(&env, &mut rng);
        let next = env.step(&start, &a)?;
        let recovered = env.inverse_dynamics(&start, &next);
        println!("{:?}: a = {a:.4?} -> {next:.4?}, inverse dynamics gives {recovered:.4?}", env.kind());

        let mut s = start.clone();
        let mut visited = vec![s.clone()];
        for _ in 0..2000 {
            s = env.step(&s, &random_policy(&env, &mut rng))?;
            visited.push(s.clone());
        }
        println!("  random walk of 2000 steps visits {} cells of size 0.1", env.occupancy(&visited, 0.1));
    }
    Ok(())
}
