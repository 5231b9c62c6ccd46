use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for a list of parameters.
#[derive(Clone, Debug)]
pub struct AdamState<T = f32> {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Self {
        let zeros = |p: &Tensor<T>| Tensor::zeros(p.rows(), p.cols());
        Self {
            config,
            step: 0,
            first: params.iter().map(zeros).collect(),
            second: params.iter().map(zeros).collect(),
        }
    }
}

fn check_shapes<T: Real>(params: &[Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!(
                "parameter {i} is {:?} but gradient is {:?}",
                p.shape(),
                g.shape()
            )));
        }
    }
    Ok(())
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Real>(
    params: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
) -> Result<()> {
    check_shapes(params, grads)?;
    if state.first.len() != params.len()
        || state
            .first
            .iter()
            .zip(params.iter())
            .any(|(m, p)| m.shape() != p.shape())
    {
        return Err(Error::Shape(
            "optimizer state does not match parameters".into(),
        ));
    }
    state.step += 1;
    let c = state.config;
    if c.lr == 0.0 {
        // Moments still advance; parameters must stay bit-identical.
        advance_moments(grads, state);
        return Ok(());
    }
    let t = state.step as i32;
    let b1 = T::from_f64(c.beta1).unwrap();
    let b2 = T::from_f64(c.beta2).unwrap();
    let lr = T::from_f64(c.lr).unwrap();
    let eps = T::from_f64(c.eps).unwrap();
    let corr1 = T::one() - b1.powi(t);
    let corr2 = T::one() - b2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let g = grads[i].data();
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        for (j, w) in p.data_mut().iter_mut().enumerate() {
            m[j] = b1 * m[j] + (T::one() - b1) * g[j];
            v[j] = b2 * v[j] + (T::one() - b2) * g[j] * g[j];
            let m_hat = m[j] / corr1;
            let v_hat = v[j] / corr2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

fn advance_moments<T: Real>(grads: &[Tensor<T>], state: &mut AdamState<T>) {
    let b1 = T::from_f64(state.config.beta1).unwrap();
    let b2 = T::from_f64(state.config.beta2).unwrap();
    for (i, g) in grads.iter().enumerate() {
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        for (j, &gj) in g.data().iter().enumerate() {
            m[j] = b1 * m[j] + (T::one() - b1) * gj;
            v[j] = b2 * v[j] + (T::one() - b2) * gj * gj;
        }
    }
}

/// Plain gradient descent `p -= lr * g`.
pub fn sgd_step<T: Real>(params: &mut [Tensor<T>], grads: &[Tensor<T>], lr: f64) -> Result<()> {
    check_shapes(params, grads)?;
    if lr == 0.0 {
        return Ok(());
    }
    let lr = T::from_f64(lr).unwrap();
    for (p, g) in params.iter_mut().zip(grads) {
        for (w, &d) in p.data_mut().iter_mut().zip(g.data()) {
            *w -= lr * d;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Optimizer bound to one parameter list.
#[derive(Clone, Debug)]
pub enum Optimizer<T = f32> {
    Adam(AdamState<T>),
    Sgd { lr: f64 },
}

impl<T: Real> Optimizer<T> {
    pub fn new(kind: OptimizerKind, config: AdamConfig, params: &[Tensor<T>]) -> Self {
        match kind {
            OptimizerKind::Adam => Self::Adam(AdamState::new(config, params)),
            OptimizerKind::Sgd => Self::Sgd { lr: config.lr },
        }
    }

    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        match self {
            Self::Adam(state) => adam_step(params, grads, state),
            Self::Sgd { lr } => sgd_step(params, grads, *lr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![Tensor::<f32>::row(&[1.5, -2.0])];
        let before = p.clone();
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut p, &[Tensor::zeros(1, 2)], &mut st).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = vec![Tensor::<f64>::row(&[0.0, 0.0, 0.0])];
        let cfg = AdamConfig {
            lr: 0.01,
            ..Default::default()
        };
        let mut st = AdamState::new(cfg, &p);
        let g = Tensor::row(&[3.0, -0.5, 1e-2]);
        adam_step(&mut p, &[g], &mut st).unwrap();
        for (&w, expect) in p[0].data().iter().zip([-0.01, 0.01, -0.01]) {
            assert!((w - expect).abs() < 1e-8, "{w} vs {expect}");
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = vec![Tensor::<f32>::zeros(2, 2)];
        let mut st = AdamState::new(AdamConfig::default(), &p);
        assert!(adam_step(&mut p, &[Tensor::zeros(1, 2)], &mut st).is_err());
        assert!(adam_step(&mut p, &[], &mut st).is_err());
    }

    #[test]
    fn zero_lr_is_bitwise_identity() {
        let mut p = vec![Tensor::<f32>::row(&[-0.0, 0.3, -7.25])];
        let before = p.clone();
        let cfg = AdamConfig {
            lr: 0.0,
            ..Default::default()
        };
        let mut opt = Optimizer::new(OptimizerKind::Adam, cfg, &p);
        for _ in 0..3 {
            opt.step(&mut p, &[Tensor::row(&[1.0, -1.0, 2.0])]).unwrap();
        }
        let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p[0]), bits(&before[0]));
    }
}
