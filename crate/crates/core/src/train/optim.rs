//! Adam and Adamax with bias correction.

use crate::error::{Error, Result};
use crate::scalar::{real, Float};

use super::{ModelParams, Optimizer};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Per-tensor first and second moment accumulators.
#[derive(Clone, Debug)]
pub struct OptState<T> {
    step: usize,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Float> OptState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let mut first = Vec::new();
        params.for_each_tensor(|_, data| first.push(vec![T::zero(); data.len()]));
        let second = first.clone();
        Self { step: 0, first, second }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }
}

/// One optimizer update; applies the PSD projection afterwards on layers
/// that request it. Gradients must be finite.
pub fn optimizer_step<T: Float>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut OptState<T>,
    optimizer: Optimizer,
    learning_rate: T,
) -> Result<()> {
    let mut bad: Option<String> = None;
    grads.for_each_tensor(|name, data| {
        if bad.is_none() && data.iter().any(|v| !v.is_finite()) {
            bad = Some(name.to_string());
        }
    });
    if let Some(name) = bad {
        return Err(Error::NonFiniteGradient(name));
    }

    state.step += 1;
    let t = state.step as i32;
    let b1 = real::<T>(BETA1);
    let b2 = real::<T>(BETA2);
    let eps = real::<T>(EPS);
    let bias1 = T::one() - real::<T>(BETA1.powi(t));
    let bias2 = T::one() - real::<T>(BETA2.powi(t));

    let mut flat_grads: Vec<Vec<T>> = Vec::new();
    grads.for_each_tensor(|_, data| flat_grads.push(data.to_vec()));

    let mut idx = 0;
    params.for_each_tensor_mut(|_, data| {
        let g = &flat_grads[idx];
        let m = &mut state.first[idx];
        let v = &mut state.second[idx];
        match optimizer {
            Optimizer::Adam => {
                for k in 0..data.len() {
                    m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                    v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                    let m_hat = m[k] / bias1;
                    let v_hat = v[k] / bias2;
                    data[k] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
                }
            }
            Optimizer::Adamax => {
                for k in 0..data.len() {
                    m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                    v[k] = (b2 * v[k]).max(g[k].abs());
                    data[k] -= learning_rate / bias1 * m[k] / (v[k] + eps);
                }
            }
        }
        idx += 1;
    });

    for layer in &mut params.fmp {
        if layer.psd_project {
            layer.project_psd()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{Architecture, Linear, ModelParams};

    /// One scalar weight; the quadratic test objective is f(w) = w².
    fn scalar_model(w: f64) -> ModelParams<f64> {
        let mut head = Linear::zeros(1, 1);
        head.weight.set(0, 0, w);
        ModelParams {
            arch: Architecture::FmpDiscrete,
            encoder: Vec::new(),
            fmp: Vec::new(),
            gcn: Vec::new(),
            head,
            dropout_rate: 0.0,
            ode_steps: 1,
            ode_horizon: 1.0,
        }
    }

    fn run_quadratic(optimizer: Optimizer) -> f64 {
        let mut params = scalar_model(1.0);
        let mut state = OptState::new(&params);
        for _ in 0..200 {
            let mut grads = params.zeros_like();
            let w = params.head.weight.get(0, 0);
            grads.head.weight.set(0, 0, 2.0 * w);
            optimizer_step(&mut params, &grads, &mut state, optimizer, 0.1).unwrap();
        }
        params.head.weight.get(0, 0)
    }

    #[test]
    fn adam_minimizes_quadratic() {
        assert!(run_quadratic(Optimizer::Adam).abs() <= 1e-3);
    }

    #[test]
    fn adamax_minimizes_quadratic() {
        assert!(run_quadratic(Optimizer::Adamax).abs() <= 1e-3);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut params = scalar_model(0.7);
        let grads = params.zeros_like();
        let mut state = OptState::new(&params);
        optimizer_step(&mut params, &grads, &mut state, Optimizer::Adam, 0.1).unwrap();
        assert_eq!(params.head.weight.get(0, 0), 0.7);
    }

    #[test]
    fn non_finite_gradient_names_the_tensor() {
        let mut params = scalar_model(1.0);
        let mut grads = params.zeros_like();
        grads.head.weight.set(0, 0, f64::NAN);
        let mut state = OptState::new(&params);
        let err = optimizer_step(&mut params, &grads, &mut state, Optimizer::Adam, 0.1)
            .unwrap_err();
        match err {
            Error::NonFiniteGradient(name) => assert_eq!(name, "head.weight"),
            other => panic!("unexpected error {other}"),
        }
    }
}
