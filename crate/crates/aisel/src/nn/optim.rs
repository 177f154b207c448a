use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::network::{Gradients, Network};
use crate::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptKind {
    Sgd,
    Adam,
}

/// Per-network optimizer state. Adam moments mirror the parameter shapes.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptKind,
    pub learning_rate: f64,
    step: u64,
    m_weights: Vec<Matrix>,
    m_biases: Vec<Vec<f64>>,
    v_weights: Vec<Matrix>,
    v_biases: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: OptKind, learning_rate: f64, net: &Network) -> Self {
        let zw = || {
            net.layers()
                .iter()
                .map(|l| Matrix::zeros(l.in_dim, l.out_dim))
                .collect::<Vec<_>>()
        };
        let zb = || {
            net.layers()
                .iter()
                .map(|l| vec![0.0; l.out_dim])
                .collect::<Vec<_>>()
        };
        OptimizerState {
            kind,
            learning_rate,
            step: 0,
            m_weights: zw(),
            m_biases: zb(),
            v_weights: zw(),
            v_biases: zb(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

#[inline]
fn adam_update(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, t: f64) {
    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
    let m_hat = *m / (1.0 - ADAM_BETA1.powf(t));
    let v_hat = *v / (1.0 - ADAM_BETA2.powf(t));
    *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
}

/// Applies one optimizer step in place, advancing the step counter.
pub fn step(net: &mut Network, grads: &Gradients, opt: &mut OptimizerState) -> Result<()> {
    let n = net.layers().len();
    if grads.d_weights.len() != n || grads.d_biases.len() != n {
        return Err(Error::ShapeMismatch("gradient layer count".into()));
    }
    for li in 0..n {
        let spec = net.layers()[li];
        let gw = &grads.d_weights[li];
        if gw.rows() != spec.in_dim || gw.cols() != spec.out_dim || grads.d_biases[li].len() != spec.out_dim {
            return Err(Error::ShapeMismatch(format!("gradient shape at layer {li}")));
        }
    }
    opt.step += 1;
    let lr = opt.learning_rate;
    match opt.kind {
        OptKind::Sgd => {
            for li in 0..n {
                let gw = grads.d_weights[li].data();
                for (p, &g) in net.weights_mut()[li].data_mut().iter_mut().zip(gw) {
                    *p -= lr * g;
                }
                let gb = &grads.d_biases[li];
                for (p, &g) in net.biases_mut()[li].iter_mut().zip(gb) {
                    *p -= lr * g;
                }
            }
        }
        OptKind::Adam => {
            let t = opt.step as f64;
            for li in 0..n {
                let gw = grads.d_weights[li].data();
                let mw = opt.m_weights[li].data_mut();
                let vw = opt.v_weights[li].data_mut();
                for (((p, &g), m), v) in net.weights_mut()[li]
                    .data_mut()
                    .iter_mut()
                    .zip(gw)
                    .zip(mw.iter_mut())
                    .zip(vw.iter_mut())
                {
                    adam_update(p, g, m, v, lr, t);
                }
                let gb = &grads.d_biases[li];
                let mb = &mut opt.m_biases[li];
                let vb = &mut opt.v_biases[li];
                for (((p, &g), m), v) in net.biases_mut()[li]
                    .iter_mut()
                    .zip(gb)
                    .zip(mb.iter_mut())
                    .zip(vb.iter_mut())
                {
                    adam_update(p, g, m, v, lr, t);
                }
            }
        }
    }
    Ok(())
}
