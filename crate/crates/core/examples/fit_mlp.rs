//! Fit a small MLP to sin(x) with Adam, then save and reload it.

use ebm_plan::nn::{adam_step, checkpoint, Activation, AdamHyper, AdamState, Mlp, MlpShape};
use ebm_plan::seeded_rng;
use ndarray::Array2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(0);
    let shape = MlpShape { hidden: vec![32, 32], activation: Activation::Tanh };
    let mut net = Mlp::random(1, &shape, 1, &mut rng);
    let xs = Array2::from_shape_fn((64, 1), |(i, _)| -3.0 + 6.0 * i as f64 / 63.0);
    let ys = xs.mapv(f64::sin);

    let hyper = AdamHyper::with_learning_rate(1e-3);
    let mut adam = AdamState::new(&net);
    for step in 0..=3000 {
        let diff = net.forward_batch(xs.view())? - &ys;
        let mse = diff.iter().map(|d| d * d).sum::<f64>() / 64.0;
        let (grads, _) = net.gradients_batch(xs.view(), (diff * (2.0 / 64.0)).view())?;
        adam_step(&mut net, &grads, &mut adam, &hyper)?;
        if step % 500 == 0 {
            println!("step {step:>4}  mse {mse:.2e}");
        }
    }

    let path = std::env::temp_dir().join("fit_mlp.ckpt");
    checkpoint::save(&net, &path)?;
    assert_eq!(checkpoint::load(&path)?, net);
    println!("saved to {}", path.display());
    Ok(())
}
