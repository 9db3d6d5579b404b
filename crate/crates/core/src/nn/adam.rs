use ndarray::Zip;

use super::mlp::{Gradients, Mlp};
use crate::error::{config_err, Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adam moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    first: Gradients,
    second: Gradients,
    step: u64,
}

impl Adam {
    pub fn new(net: &Mlp) -> Self {
        Adam {
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &Gradients {
        &self.first
    }

    pub fn second_moment(&self) -> &Gradients {
        &self.second
    }

    /// Applies one bias-corrected Adam update to `params`.
    ///
    /// An all-zero gradient leaves both the parameters and the optimizer
    /// state untouched.
    pub fn step(&mut self, params: &mut Mlp, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if !(learning_rate > 0.0) {
            return Err(config_err(format!("learning rate must be positive, got {learning_rate}")));
        }
        if !grads.matches(params) || !self.first.matches(params) {
            return Err(config_err("gradient shape does not match the parameters"));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("non-finite gradient passed to Adam".into()));
        }
        if grads.is_zero() {
            return Ok(());
        }

        self.step += 1;
        let t = self.step as i32;
        let correct1 = 1.0 - ADAM_BETA1.powi(t);
        let correct2 = 1.0 - ADAM_BETA2.powi(t);

        for (((layer, g), m), v) in params
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first.layers)
            .zip(&mut self.second.layers)
        {
            let update = |p: &mut f64, m: &mut f64, v: &mut f64, &g: &f64| {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = *m / correct1;
                let v_hat = *v / correct2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            };
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(update);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer};
    use ndarray::{array, Array1, Array2};

    fn scalar(w: f64) -> Mlp {
        Mlp::from_layers(vec![Layer {
            weight: array![[w]],
            bias: Array1::zeros(1),
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    fn grad(g: f64) -> Gradients {
        Gradients {
            layers: vec![crate::nn::LayerGradient { weight: array![[g]], bias: Array1::zeros(1) }],
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate_times_sign() {
        for g in [3.0, -0.02] {
            let mut net = scalar(1.0);
            let mut opt = Adam::new(&net);
            opt.step(&mut net, &grad(g), 0.01).unwrap();
            let delta = net.layers()[0].weight[[0, 0]] - 1.0;
            assert!((delta + 0.01 * g.signum()).abs() < 1e-8, "delta {delta}");
            assert_eq!(opt.step_count(), 1);
        }
    }

    #[test]
    fn three_step_trace() {
        // Hand-executed recurrence, lr = 0.1, w0 = 0.5, gradients 1.0, -2.0, 0.5:
        // t=1 m=0.1     v=0.001     m̂=1.0       v̂=1.0       w=0.400000001
        // t=2 m=-0.11   v=0.004999  m̂=-0.578947 v̂=2.500750  w=0.436610353...
        // t=3 m=-0.049  v=0.005244  m̂=-0.180812 v̂=1.749749  w=0.450279419...
        let expected = [0.400_000_001, 0.436_610_353_472_074_83, 0.450_279_419_673_821_46];
        let mut net = scalar(0.5);
        let mut opt = Adam::new(&net);
        for (g, want) in [1.0, -2.0, 0.5].into_iter().zip(expected) {
            opt.step(&mut net, &grad(g), 0.1).unwrap();
            let w = net.layers()[0].weight[[0, 0]];
            assert!((w - want).abs() < 1e-9, "got {w}, want {want}");
        }
    }

    #[test]
    fn zero_gradient_is_identity_for_any_state() {
        let mut net = scalar(0.7);
        let mut opt = Adam::new(&net);
        opt.step(&mut net, &grad(1.0), 0.01).unwrap();
        let before = net.clone();
        for _ in 0..5 {
            opt.step(&mut net, &grad(0.0), 0.01).unwrap();
        }
        assert_eq!(net, before);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut net = scalar(0.0);
        let mut opt = Adam::new(&net);
        assert!(matches!(opt.step(&mut net, &grad(f64::NAN), 0.01), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut net = scalar(0.0);
        let mut opt = Adam::new(&net);
        let g = Gradients {
            layers: vec![crate::nn::LayerGradient { weight: Array2::zeros((2, 1)), bias: Array1::zeros(2) }],
        };
        assert!(opt.step(&mut net, &g, 0.01).is_err());
    }
}
