use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::{Error, Result};

const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu,
    Tanh,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::LeakyRelu => 2,
            Activation::Tanh => 3,
            Activation::Sigmoid => 4,
            Activation::Softmax => 5,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::LeakyRelu,
            3 => Activation::Tanh,
            4 => Activation::Sigmoid,
            5 => Activation::Softmax,
            t => return Err(Error::Checkpoint(format!("unknown activation tag {t}"))),
        })
    }

    /// He fan-in scaling for relu-family, Xavier otherwise.
    fn init_limit(self, fan_in: usize) -> f64 {
        match self {
            Activation::Relu | Activation::LeakyRelu => (6.0 / fan_in as f64).sqrt(),
            _ => (3.0 / fan_in as f64).sqrt(),
        }
    }

    /// Applies the activation to one row of pre-activations in place.
    fn apply_row(self, row: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for v in row.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Activation::LeakyRelu => {
                for v in row.iter_mut() {
                    if *v < 0.0 {
                        *v *= LEAKY_SLOPE;
                    }
                }
            }
            Activation::Tanh => {
                for v in row.iter_mut() {
                    *v = v.tanh();
                }
            }
            Activation::Sigmoid => {
                for v in row.iter_mut() {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            Activation::Softmax => {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
    }

    /// Derivative given pre-activation `z` and output `y`. Softmax is handled
    /// separately in `backward` and never routed here.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Softmax => unreachable!("softmax gradient is combined with the loss"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// Sequential dense network. Immutable between optimizer steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<LayerSpec>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Per-layer activations recorded by `forward`, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input batch; `activations[i]` the output of layer i-1.
    pub(crate) activations: Vec<Matrix>,
    /// Pre-activation values per layer.
    pub(crate) pre: Vec<Matrix>,
}

/// Per-layer parameter gradients, shapes mirroring the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            d_weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.in_dim, l.out_dim))
                .collect(),
            d_biases: net.layers.iter().map(|l| vec![0.0; l.out_dim]).collect(),
        }
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidLayer("network needs at least one layer".into()));
    }
    for (i, spec) in specs.iter().enumerate() {
        if spec.in_dim == 0 || spec.out_dim == 0 {
            return Err(Error::InvalidLayer(format!("layer {i} has a zero dimension")));
        }
        if spec.activation == Activation::Softmax && i + 1 != specs.len() {
            return Err(Error::InvalidLayer(format!(
                "softmax only allowed as final layer, found at layer {i}"
            )));
        }
        if i > 0 && specs[i - 1].out_dim != spec.in_dim {
            return Err(Error::DimChain {
                index: i,
                in_dim: spec.in_dim,
                prev_out: specs[i - 1].out_dim,
            });
        }
    }
    Ok(())
}

/// Builds a network with scaled-uniform weights and zero biases,
/// deterministic per seed.
pub fn init_network(specs: &[LayerSpec], seed: u64) -> Result<Network> {
    validate_specs(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(specs.len());
    let mut biases = Vec::with_capacity(specs.len());
    for spec in specs {
        let limit = spec.activation.init_limit(spec.in_dim);
        let data: Vec<f64> = (0..spec.in_dim * spec.out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        weights.push(Matrix::from_vec(spec.in_dim, spec.out_dim, data)?);
        biases.push(vec![0.0; spec.out_dim]);
    }
    Ok(Network {
        layers: specs.to_vec(),
        weights,
        biases,
    })
}

impl Network {
    pub fn from_parts(layers: Vec<LayerSpec>, weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        validate_specs(&layers)?;
        if weights.len() != layers.len() || biases.len() != layers.len() {
            return Err(Error::ShapeMismatch("parameter count != layer count".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if weights[i].rows() != l.in_dim || weights[i].cols() != l.out_dim || biases[i].len() != l.out_dim {
                return Err(Error::ShapeMismatch(format!("layer {i} parameter shape")));
            }
        }
        Ok(Network {
            layers,
            weights,
            biases,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.in_dim * l.out_dim + l.out_dim).sum()
    }

    pub fn max_abs_param(&self) -> f64 {
        let mut m: f64 = 0.0;
        for w in &self.weights {
            for &v in w.data() {
                m = m.max(v.abs());
            }
        }
        for b in &self.biases {
            for &v in b {
                m = m.max(v.abs());
            }
        }
        m
    }

    pub fn params_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if batch.cols() != self.in_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} cols, network expects {}",
                batch.cols(),
                self.in_dim()
            )));
        }
        let mut activations = vec![batch.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (li, spec) in self.layers.iter().enumerate() {
            let mut z = activations[li].matmul(&self.weights[li])?;
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, b) in row.iter_mut().zip(self.biases[li].iter()) {
                    *v += b;
                }
            }
            pre.push(z.clone());
            for r in 0..z.rows() {
                spec.activation.apply_row(z.row_mut(r));
            }
            activations.push(z);
        }
        let out = activations[activations.len() - 1].clone();
        Ok((out, ForwardCache { activations, pre }))
    }

    /// Convenience forward without keeping the cache.
    pub fn forward_only(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward(batch)?.0)
    }

    /// Exact reverse-mode gradients.
    ///
    /// `output_grad` is the loss gradient with respect to the network output,
    /// except when the final activation is softmax: then it must be the
    /// gradient with respect to the final-layer logits (the usual combined
    /// softmax/cross-entropy form). Returns parameter gradients and the
    /// gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<(Gradients, Matrix)> {
        let n_layers = self.layers.len();
        if cache.activations.len() != n_layers + 1 || cache.pre.len() != n_layers {
            return Err(Error::ShapeMismatch("cache does not match network depth".into()));
        }
        let last = &cache.activations[n_layers];
        if output_grad.rows() != last.rows() || output_grad.cols() != last.cols() {
            return Err(Error::ShapeMismatch("output_grad shape".into()));
        }

        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_grad.clone();
        for li in (0..n_layers).rev() {
            let spec = &self.layers[li];
            // delta currently holds dL/d(output of layer li); convert to
            // dL/d(pre-activation). Softmax final layers receive dL/dz directly.
            if spec.activation != Activation::Softmax {
                let z = &cache.pre[li];
                let y = &cache.activations[li + 1];
                for r in 0..delta.rows() {
                    for c in 0..delta.cols() {
                        let d = spec.activation.derivative(z.get(r, c), y.get(r, c));
                        delta.set(r, c, delta.get(r, c) * d);
                    }
                }
            }
            grads.d_weights[li] = cache.activations[li].t_matmul(&delta)?;
            for r in 0..delta.rows() {
                for (c, b) in grads.d_biases[li].iter_mut().enumerate() {
                    *b += delta.get(r, c);
                }
            }
            if li > 0 {
                delta = delta.matmul_t(&self.weights[li])?;
            } else {
                delta = delta.matmul_t(&self.weights[0])?;
                return Ok((grads, delta));
            }
        }
        unreachable!()
    }

    /// Projects every weight and bias onto `[-beta, beta]`.
    pub fn clip_params(&mut self, beta: f64) -> Result<()> {
        if beta <= 0.0 {
            return Err(Error::InvalidArgument(format!("clip bound must be positive, got {beta}")));
        }
        for w in &mut self.weights {
            for v in w.data_mut() {
                *v = v.clamp(-beta, beta);
            }
        }
        for b in &mut self.biases {
            for v in b.iter_mut() {
                *v = v.clamp(-beta, beta);
            }
        }
        Ok(())
    }
}
