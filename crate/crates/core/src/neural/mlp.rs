use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};
use crate::rng::Rng;

/// Negative-side slope of [`Activation::LeakyRelu`].
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 5] =
        [Activation::Identity, Activation::Relu, Activation::LeakyRelu, Activation::Tanh, Activation::Sigmoid];

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative given the pre-activation `z` and the activation `a = f(z)`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => f64::from(u8::from(z > 0.0)),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::LeakyRelu => 2,
            Activation::Tanh => 3,
            Activation::Sigmoid => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Activation::ALL.into_iter().find(|a| a.tag() == tag)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Identity => "none",
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| Error::invalid(format!("unknown activation '{s}'")))
    }
}

/// Fully-connected layer computing `f(x Wᵀ + b)` for a row batch `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out x in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    /// Bumped on every parameter mutation so stale caches can be detected.
    version: u64,
}

/// Per-layer values saved by [`MlpModel::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    post: Matrix,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.post
    }

    /// Pre-activation values of each layer.
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }
}

/// Weight and bias gradients for each layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.values().iter().chain(b).all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.values().iter().chain(b))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct Backprop {
    pub grads: Gradients,
    /// Gradient with respect to the model input batch.
    pub input_grad: Matrix,
}

impl MlpModel {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("model needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::dims(format!("layer {i}: bias length {} != {}", l.bias.len(), l.output_dim())));
            }
            if l.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite("layer bias"));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].output_dim() != w[1].input_dim() {
                return Err(Error::dims(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].output_dim(),
                    i + 1,
                    w[1].input_dim()
                )));
            }
        }
        Ok(MlpModel { layers, version: 0 })
    }

    /// Random model with weights drawn from `N(0, std^2)` and zero biases.
    ///
    /// `dims` lists the layer widths including the input, so it has one more
    /// entry than `activations`.
    pub fn init(dims: &[usize], activations: &[Activation], std: f64, rng: &mut Rng) -> Result<Self> {
        if dims.len() != activations.len() + 1 || dims.contains(&0) {
            return Err(Error::invalid("layer widths must be positive and match the activation list"));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &activation)| {
                let values = (0..d[0] * d[1]).map(|_| std * rng.normal()).collect();
                Dense {
                    weights: Matrix::from_raw(d[1], d[0], values),
                    bias: vec![0.0; d[1]],
                    activation,
                }
            })
            .collect();
        MlpModel::new(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.values().len() + l.bias.len()).sum()
    }

    /// Parameter buffers in a fixed order: each layer's weights then bias.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.values_mut(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.values(), l.bias.as_slice()]).collect()
    }

    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if batch.cols() != self.input_dim() {
            return Err(Error::dims(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        let n = batch.rows();
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = batch.clone();
        for layer in &self.layers {
            let mut z = Matrix::zeros(n, layer.output_dim());
            for row in z.values_mut().chunks_exact_mut(layer.output_dim()) {
                row.copy_from_slice(&layer.bias);
            }
            gemm(1.0, &x, false, &layer.weights, true, 1.0, &mut z);
            let mut a = z.clone();
            a.values_mut().iter_mut().for_each(|v| *v = layer.activation.apply(*v));
            inputs.push(x);
            pre.push(z);
            x = a;
        }
        let cache = ForwardCache { inputs, pre, post: x.clone(), version: self.version };
        Ok((x, cache))
    }

    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.forward(batch).map(|(out, _)| out)
    }

    /// Reverse-mode gradients of a scalar loss given `output_grad`, its
    /// derivative with respect to the model output.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<Backprop> {
        if cache.version != self.version || cache.inputs.len() != self.layers.len() {
            return Err(Error::invalid("forward cache is stale or belongs to another model"));
        }
        if output_grad.rows() != cache.post.rows() || output_grad.cols() != self.output_dim() {
            return Err(Error::dims(format!(
                "output gradient is {}x{}, expected {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                cache.post.rows(),
                self.output_dim()
            )));
        }
        let n = output_grad.rows();
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[i];
            let a = if i + 1 == self.layers.len() { &cache.post } else { &cache.inputs[i + 1] };
            let mut dz = upstream;
            for ((g, &zv), &av) in dz.values_mut().iter_mut().zip(z.values()).zip(a.values()) {
                *g *= layer.activation.derivative(zv, av);
            }
            let mut dw = Matrix::zeros(layer.output_dim(), layer.input_dim());
            gemm(1.0, &dz, true, &cache.inputs[i], false, 0.0, &mut dw);
            let mut db = vec![0.0; layer.output_dim()];
            for row in dz.values().chunks_exact(layer.output_dim()) {
                db.iter_mut().zip(row).for_each(|(b, g)| *b += g);
            }
            let mut dx = Matrix::zeros(n, layer.input_dim());
            gemm(1.0, &dz, false, &layer.weights, false, 0.0, &mut dx);
            grads.push((dw, db));
            upstream = dx;
        }
        grads.reverse();
        Ok(Backprop { grads: Gradients { layers: grads }, input_grad: upstream })
    }
}
