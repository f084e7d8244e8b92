//! Recursive least squares recovering the particle's inverse dynamics, with
//! the default prior and a nearly flat one.

use ebm_plan::baselines::{random_policy, RlsState};
use ebm_plan::envs::Env;
use ebm_plan::seeded_rng;

fn main() -> ebm_plan::Result<()> {
    let env = Env::Particle;
    for p0 in [RlsState::DEFAULT_P0, 1e8] {
        let mut rng = seeded_rng(0);
        let mut rls = RlsState::with_prior(2, 2, p0, 1.0)?;
        for n in 1..=200 {
            let s = env.random_state(&mut rng);
            let next = env.step(&s, &random_policy(&env, &mut rng))?;
            // label with the realized displacement: the map clamp can shorten the move
            rls.update(&s, &next, &env.inverse_dynamics(&s, &next))?;
            if n % 50 == 0 {
                let s = env.random_state(&mut rng);
                let next = env.step(&s, &random_policy(&env, &mut rng))?;
                let (guess, truth) = (rls.infer(&s, &next)?, env.inverse_dynamics(&s, &next));
                println!("p0 {p0:.0e}, {n:>3} updates: error {:.2e}", (guess[0] - truth[0]).hypot(guess[1] - truth[1]));
            }
        }
    }
    Ok(())
}
