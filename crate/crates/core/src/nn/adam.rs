use serde::{Deserialize, Serialize};

use super::{Mlp, MlpGrads};
use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamHyper {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.learning_rate > 0.0, || "learning_rate must be > 0".into())?;
        ensure(self.beta1 > 0.0 && self.beta1 < 1.0, || "beta1 must lie in (0, 1)".into())?;
        ensure(self.beta2 > 0.0 && self.beta2 < 1.0, || "beta2 must lie in (0, 1)".into())?;
        ensure(self.epsilon > 0.0, || "epsilon must be > 0".into())
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moments: MlpGrads,
    pub second_moments: MlpGrads,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(params: &Mlp) -> Self {
        Self {
            first_moments: MlpGrads::zeros_like(params),
            second_moments: MlpGrads::zeros_like(params),
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut Mlp, grads: &MlpGrads, state: &mut AdamState, hyper: &AdamHyper) -> Result<()> {
    hyper.validate()?;
    ensure(grads.matches(params), || "gradient shapes do not match parameters".into())?;
    ensure(state.first_moments.matches(params) && state.second_moments.matches(params), || {
        "optimizer state shapes do not match parameters".into()
    })?;

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (hyper.beta1, hyper.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = hyper.learning_rate;
    let eps = hyper.epsilon;

    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };

    let layers = params.layers_mut();
    for (i, layer) in layers.iter_mut().enumerate() {
        let g = &grads.layers[i];
        let m = &mut state.first_moments.layers[i];
        let v = &mut state.second_moments.layers[i];
        for (((p, &gw), mw), vw) in
            layer.weights.iter_mut().zip(g.weights.iter()).zip(m.weights.iter_mut()).zip(v.weights.iter_mut())
        {
            update(p, gw, mw, vw);
        }
        for (((p, &gb), mb), vb) in
            layer.bias.iter_mut().zip(g.bias.iter()).zip(m.bias.iter_mut()).zip(v.bias.iter_mut())
        {
            update(p, gb, mb, vb);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense};
    use ndarray::array;

    fn scalar(theta: f64) -> Mlp {
        Mlp::new(vec![Dense { weights: array![[theta]], bias: array![0.0], activation: Activation::Identity }]).unwrap()
    }

    fn scalar_grad(g: f64) -> MlpGrads {
        let mut grads = MlpGrads::zeros_like(&scalar(0.0));
        grads.layers[0].weights[[0, 0]] = g;
        grads
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut net = scalar(0.37);
        let before = net.clone();
        let mut st = AdamState::new(&net);
        adam_step(&mut net, &MlpGrads::zeros_like(&before), &mut st, &AdamHyper::default()).unwrap();
        assert_eq!(net, before);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = scalar(0.0);
        let mut st = AdamState::new(&net);
        let hyper = AdamHyper::with_learning_rate(0.1);
        adam_step(&mut net, &scalar_grad(1.0), &mut st, &hyper).unwrap();
        let theta = net.layers()[0].weights[[0, 0]];
        // m_hat = 1, v_hat = 1
        assert!((theta - (-0.1 / (1.0 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn two_step_moment_recursion() {
        let mut net = scalar(0.0);
        let mut st = AdamState::new(&net);
        let hyper = AdamHyper::default();
        let g = 0.7;
        adam_step(&mut net, &scalar_grad(g), &mut st, &hyper).unwrap();
        adam_step(&mut net, &scalar_grad(g), &mut st, &hyper).unwrap();
        let m = st.first_moments.layers[0].weights[[0, 0]];
        let v = st.second_moments.layers[0].weights[[0, 0]];
        let b1: f64 = 0.9;
        let b2: f64 = 0.999;
        assert!((m - (1.0 - b1.powi(2)) * g).abs() < 1e-15);
        assert!((v - (1.0 - b2.powi(2)) * g * g).abs() < 1e-15);
        assert_eq!(st.step_count, 2);
    }

    #[test]
    fn rejects_bad_hyper_and_shapes() {
        let mut net = scalar(0.0);
        let mut st = AdamState::new(&net);
        let bad = AdamHyper { beta1: 1.0, ..AdamHyper::default() };
        assert!(adam_step(&mut net, &scalar_grad(1.0), &mut st, &bad).is_err());
        let other = Mlp::new(vec![Dense::zeros(2, 1, Activation::Identity)]).unwrap();
        assert!(adam_step(&mut net, &MlpGrads::zeros_like(&other), &mut st, &AdamHyper::default()).is_err());
    }
}
