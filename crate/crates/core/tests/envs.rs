//! Environment invariants over many random transitions.

use ebm_plan::baselines::random_policy;
use ebm_plan::bench::data::gen_random_dataset;
use ebm_plan::envs::{Env, MazeLayout, ReacherParams};
use ebm_plan::seeded_rng;
use proptest::prelude::*;

fn all_envs() -> [Env; 3] {
    [Env::Particle, Env::Maze(MazeLayout::s_corridor()), Env::Reacher(ReacherParams::default())]
}

#[test]
fn inverse_dynamics_roundtrip() {
    for env in all_envs() {
        let mut rng = seeded_rng(1);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let s = env.random_state(&mut rng);
            let next = env.step(&s, &random_policy(&env, &mut rng)).unwrap();
            let again = env.step(&s, &env.inverse_dynamics(&s, &next)).unwrap();
            for (a, b) in again.iter().zip(&next) {
                worst = worst.max((a - b).abs());
            }
        }
        let tol = if matches!(env, Env::Reacher(_)) { 1e-10 } else { 0.0 };
        assert!(worst <= tol, "{:?}: worst round-trip error {worst}", env.kind());
    }
}

#[test]
fn random_policy_is_centred() {
    for env in all_envs() {
        let mut rng = seeded_rng(2);
        let n = 100_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let a = random_policy(&env, &mut rng);
            mean[0] += a[0] / n as f64;
            mean[1] += a[1] / n as f64;
        }
        assert!(mean.iter().all(|m| m.abs() < 0.005), "{:?}: mean {mean:?}", env.kind());
    }
}

#[test]
fn random_dataset_covers_the_map() {
    let env = Env::Particle;
    let data = gen_random_dataset(&env, 10_000, 50, &mut seeded_rng(3)).unwrap();
    let states: Vec<Vec<f64>> = data.iter().map(|t| t.state.clone()).collect();
    assert!(env.occupancy(&states, 0.1) > 50);
}

#[test]
fn steps_are_pure() {
    for env in all_envs() {
        let mut rng = seeded_rng(4);
        let s = env.random_state(&mut rng);
        let a = random_policy(&env, &mut rng);
        assert_eq!(env.step(&s, &a).unwrap(), env.step(&s, &a).unwrap());
    }
}

fn env_strategy() -> impl Strategy<Value = Env> {
    prop_oneof![
        Just(Env::Particle),
        Just(Env::Maze(MazeLayout::s_corridor())),
        Just(Env::Reacher(ReacherParams::default())),
    ]
}

proptest! {
    #[test]
    fn steps_stay_admissible(env in env_strategy(), seed: u64, ax in -3.0f64..3.0, ay in -3.0f64..3.0) {
        let mut rng = seeded_rng(seed);
        let mut s = env.random_state(&mut rng);
        for _ in 0..20 {
            s = env.step(&s, &[ax, ay]).unwrap();
            prop_assert!(env.is_admissible(&s), "{:?} left the admissible set at {:?}", env.kind(), s);
        }
    }

    #[test]
    fn reward_is_nonpositive_and_zero_only_at_goal(env in env_strategy(), seed: u64) {
        let mut rng = seeded_rng(seed);
        let (s, g) = (env.random_state(&mut rng), env.random_state(&mut rng));
        prop_assert!(env.reward(&s, &g) < 0.0);
        prop_assert_eq!(env.reward(&s, &s), 0.0);
    }
}
