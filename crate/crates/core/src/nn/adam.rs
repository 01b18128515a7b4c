use super::{Gradients, ModelParams, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

fn update(param: &mut Tensor, m: &mut Tensor, v: &mut Tensor, g: &Tensor, cfg: &AdamConfig, c1: f64, c2: f64) {
    let p = param.data_mut();
    let m = m.data_mut();
    let v = v.data_mut();
    for i in 0..p.len() {
        let gi = g.data()[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One bias-corrected Adam update; increments `params.step`.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, cfg: &AdamConfig) -> Result<()> {
    if grads.layers.len() != params.layers.len() {
        return Err(Error::Shape("gradient/parameter layer count mismatch".into()));
    }
    params.step += 1;
    let t = params.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let layers = params
        .layers
        .iter_mut()
        .zip(params.first_moment.iter_mut())
        .zip(params.second_moment.iter_mut())
        .zip(&grads.layers);
    for (((p, m), v), g) in layers {
        match (p, m, v, g) {
            (Some(p), Some(m), Some(v), Some(g)) => {
                if p.weight.shape() != g.weight.shape() || p.bias.shape() != g.bias.shape() {
                    return Err(Error::Shape("gradient shape mismatch".into()));
                }
                update(&mut p.weight, &mut m.weight, &mut v.weight, &g.weight, cfg, c1, c2);
                update(&mut p.bias, &mut m.bias, &mut v.bias, &g.bias, cfg, c1, c2);
            }
            (None, None, None, None) => {}
            _ => return Err(Error::Shape("gradient/parameter layout mismatch".into())),
        }
    }
    Ok(())
}
