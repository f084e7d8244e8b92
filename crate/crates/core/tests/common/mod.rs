#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ebm_plan::nn::{Activation, Mlp, MlpShape};
use ebm_plan::Rng;
use rand::Rng as _;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// A random MLP with 1 to 3 layers of width at most 16.
pub fn random_net(input: usize, output: usize, rng: &mut Rng) -> Mlp {
    let depth = rng.gen_range(0..3);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=16)).collect();
    let activation = if rng.gen_bool(0.5) { Activation::Swish } else { Activation::Tanh };
    let mut net = Mlp::random(input, &MlpShape { hidden, activation }, output, rng);
    // non-zero biases so every code path is exercised
    let mut flat = net.flat_params();
    for v in &mut flat {
        *v += rng.gen_range(-0.1..0.1);
    }
    net.set_flat_params(&flat).unwrap();
    net
}

pub fn random_vec(n: usize, scale: f64, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Central differences of `f` at `x` with step `h`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub const FD_STEP: f64 = 1e-5;
/// Below this magnitude a gradient coordinate is compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

fn with_params(net: &Mlp, flat: &[f64]) -> Mlp {
    let mut n = net.clone();
    n.set_flat_params(flat).unwrap();
    n
}

fn worst(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(a, n)| rel_err(*a, *n, FD_FLOOR)).fold(0.0, f64::max)
}

/// Worst relative error of MLP parameter and input gradients against
/// central differences, over `instances` random networks.
pub fn mlp_gradient_error(instances: u64) -> f64 {
    let mut err = 0.0f64;
    for seed in 0..instances {
        let mut rng = ebm_plan::seeded_rng(seed);
        let (din, dout) = (rng.gen_range(1..=6), rng.gen_range(1..=4));
        let net = random_net(din, dout, &mut rng);
        let x = random_vec(din, 1.0, &mut rng);
        let cot = random_vec(dout, 1.0, &mut rng);
        let f = |n: &Mlp, x: &[f64]| n.forward(x).unwrap().iter().zip(&cot).map(|(o, c)| o * c).sum::<f64>();
        let (grads, input_cot) = net.gradients(&x, &cot).unwrap();
        let num_p = numeric_grad(&net.flat_params(), FD_STEP, |p| f(&with_params(&net, p), &x));
        let num_x = numeric_grad(&x, FD_STEP, |x| f(&net, x));
        err = err.max(worst(&grads.flat(), &num_p)).max(worst(&input_cot, &num_x));
    }
    err
}

/// Same for the contrastive loss, with `l2` cycling through 0, 0.5 and 1.
pub fn contrastive_gradient_error(instances: u64) -> f64 {
    use ebm_plan::ebm::{EnergyModel, TransitionPair};
    let mut err = 0.0f64;
    for seed in 0..instances {
        let mut rng = ebm_plan::seeded_rng(100 + seed);
        let d = rng.gen_range(1..=3);
        let model = EnergyModel::new(random_net(2 * d, 1, &mut rng), d).unwrap();
        let n = rng.gen_range(1..=5);
        let mut batch = || -> Vec<TransitionPair> {
            (0..n)
                .map(|_| TransitionPair::new(random_vec(d, 1.0, &mut rng), random_vec(d, 1.0, &mut rng)).unwrap())
                .collect()
        };
        let (pos, neg) = (batch(), batch());
        let l2 = [0.0, 0.5, 1.0][seed as usize % 3];
        let (_, grads) = model.contrastive_loss_and_grads(&pos, &neg, l2).unwrap();
        let num = numeric_grad(&model.net().flat_params(), FD_STEP, |p| {
            let m = EnergyModel::new(with_params(model.net(), p), d).unwrap();
            m.contrastive_loss_and_grads(&pos, &neg, l2).unwrap().0
        });
        err = err.max(worst(&grads.flat(), &num));
    }
    err
}

/// Same for the action-conditioned model's MSE.
pub fn ff_gradient_error(instances: u64) -> f64 {
    use ebm_plan::baselines::ActionFfModel;
    use ebm_plan::envs::Transition;
    let mut err = 0.0f64;
    for seed in 0..instances {
        let mut rng = ebm_plan::seeded_rng(200 + seed);
        let (sd, ad) = (rng.gen_range(1..=4), rng.gen_range(1..=2));
        let model = ActionFfModel::new(random_net(sd + ad, sd, &mut rng), sd, ad).unwrap();
        let batch: Vec<Transition> = (0..rng.gen_range(1..=6))
            .map(|_| Transition {
                state: random_vec(sd, 1.0, &mut rng),
                action: random_vec(ad, 0.1, &mut rng),
                next: random_vec(sd, 1.0, &mut rng),
            })
            .collect();
        let (_, grads) = model.loss_and_grads(&batch).unwrap();
        let num = numeric_grad(&model.net().flat_params(), FD_STEP, |p| {
            ActionFfModel::new(with_params(model.net(), p), sd, ad).unwrap().loss_and_grads(&batch).unwrap().0
        });
        err = err.max(worst(&grads.flat(), &num));
    }
    err
}

/// Worst entrywise relative error between the empirical covariance of
/// `draws` smooth-noise samples and `scale² (AᵀA)⁻¹` from nalgebra.
pub fn noise_covariance_error(horizon: usize, draws: usize, seed: u64) -> f64 {
    use ebm_plan::mppi::{finite_difference_matrix, SmoothNoise};
    use nalgebra::DMatrix;
    let scale = 0.3;
    let noise = SmoothNoise::new(horizon, 1).unwrap();
    let a = finite_difference_matrix(horizon).unwrap();
    let a = DMatrix::from_fn(horizon, horizon, |i, j| a[[i, j]]);
    let expect = (a.transpose() * a).try_inverse().unwrap() * (scale * scale);
    let mut rng = ebm_plan::seeded_rng(seed);
    let mut acc = DMatrix::<f64>::zeros(horizon, horizon);
    for _ in 0..draws {
        let x = noise.sample(scale, &mut rng);
        let v = DMatrix::from_fn(horizon, 1, |i, _| x[[i, 0]]);
        acc += &v * v.transpose();
    }
    acc /= draws as f64;
    acc.iter().zip(expect.iter()).map(|(e, x)| (e - x).abs() / x.abs()).fold(0.0, f64::max)
}

/// Final-state goal distance of zero-energy plans (N 1000, K 50, σ 0.2,
/// T 10) for each seed.
pub fn zero_energy_goal_distances(seeds: std::ops::Range<u64>) -> Vec<f64> {
    use ebm_plan::ebm::EnergyModel;
    use ebm_plan::mppi::{plan, PlanTarget, PlannerConfig};
    let model = EnergyModel::zeros(2, &MlpShape { hidden: vec![8], ..MlpShape::default() });
    let cfg = PlannerConfig { num_samples: 1000, num_iterations: 50, noise_scale: 0.2, ..PlannerConfig::default() };
    let goal = [0.4, -0.3];
    seeds
        .map(|seed| {
            let traj =
                plan(&model, &[-0.2, 0.1], PlanTarget::Goal(&goal), &cfg, &mut ebm_plan::seeded_rng(seed)).unwrap();
            let last = traj.state_vec(traj.len() - 1);
            (last[0] - goal[0]).hypot(last[1] - goal[1])
        })
        .collect()
}

pub const TINY: &str = r#"
seeds = [0, 1]

[pretrain]
dataset_size = 200
steps = 5
batch_size = 8

[pretrain.model]
hidden = [8]

[pretrain.negative_planner]
num_samples = 4
num_iterations = 2
goal_weight = 100.0

[online]
batch_size = 4
env_step_budget = 30
episode_length = 10

[online.model]
hidden = [8]

[online.planner]
num_samples = 4
num_iterations = 2
goal_weight = 100.0

[eval]
episodes = 1
episode_length = 5

[eval.planner]
num_samples = 4
num_iterations = 2
goal_weight = 100.0

[explore]
budget = 20

[diversity]
horizons = [4, 8]
trials = 3

[heatmap]
resolution = 5
"#;

pub const SUBCOMMANDS: [&str; 8] =
    ["pretrain", "online", "eval", "explore", "obstacle-gen", "ablation-correlated", "diversity", "heatmap"];

pub fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebm-bench")).args(args).output().expect("binary runs")
}

/// Runs every subcommand into `root/<subcommand>`; eval reuses the
/// pretrained checkpoint.
pub fn run_all(root: &Path) {
    let base = root.join("tiny.toml");
    fs::write(&base, TINY).unwrap();
    let with_ckpt = root.join("eval.toml");
    let ckpt = root.join("pretrain").join("ebm-seed0.ckpt");
    fs::write(&with_ckpt, format!("checkpoint = {:?}\n{TINY}", ckpt.to_str().unwrap())).unwrap();
    for sub in SUBCOMMANDS {
        let cfg = if sub == "eval" { &with_ckpt } else { &base };
        let out = root.join(sub);
        let o = bench(&[sub, "--quiet", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "--quiet printed output for {sub}");
    }
}

/// Every output file except wall-clock timings, keyed by relative path.
pub fn outputs(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    for sub in SUBCOMMANDS {
        for entry in fs::read_dir(root.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.file_name().unwrap() != "timing.csv" {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}
