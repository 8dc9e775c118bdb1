//! Fixed-architecture feed-forward networks with explicit backpropagation.
//!
//! Weights are stored `in × out` so a batch forward pass is `Z = X·W + b`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// One logistic unit.
    SigmoidBinary,
    /// Row-wise softmax over at least two units.
    Softmax,
    /// The hidden activation is applied to the last layer too. Used for the
    /// shared encoder whose output is a representation rather than a
    /// probability.
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output: OutputKind,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation, output: OutputKind) -> Self {
        Self {
            layer_sizes,
            hidden_activation,
            output,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 layer sizes, got {}",
                self.layer_sizes.len()
            )));
        }
        if let Some(pos) = self.layer_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidSpec(format!("layer {pos} has size 0")));
        }
        let out = self.output_width();
        match self.output {
            OutputKind::SigmoidBinary if out != 1 => Err(Error::InvalidSpec(format!(
                "sigmoid output needs width 1, got {out}"
            ))),
            OutputKind::Softmax if out < 2 => Err(Error::InvalidSpec(format!(
                "softmax output needs width >= 2, got {out}"
            ))),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    #[inline]
    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }

    #[inline]
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// One weight matrix (`in × out`) and bias vector per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Gradients with the same layout as [`MlpParams`].
pub type GradSet = MlpParams;

impl MlpParams {
    pub fn zeros_like(spec: &MlpSpec) -> Self {
        let weights = spec
            .layer_sizes
            .windows(2)
            .map(|w| Matrix::zeros(w[0], w[1]))
            .collect();
        let biases = spec.layer_sizes[1..]
            .iter()
            .map(|&n| vec![0.0; n])
            .collect();
        Self { weights, biases }
    }

    pub fn check_shapes(&self, spec: &MlpSpec) -> Result<()> {
        let layers = spec.num_layers();
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::shape(format!(
                "parameters have {} layers, spec has {layers}",
                self.weights.len()
            )));
        }
        for (l, w) in spec.layer_sizes.windows(2).enumerate() {
            if self.weights[l].shape() != (w[0], w[1]) || self.biases[l].len() != w[1] {
                return Err(Error::shape(format!(
                    "layer {l} does not match {}x{}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    /// Flat iterator over every scalar, layer by layer (weights then bias).
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.data().iter().chain(b.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.data_mut().iter_mut().chain(b.iter_mut()))
    }

    pub fn add_assign(&mut self, other: &GradSet) -> Result<()> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::shape("gradient sets with different depth"));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_assign(b)?;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            if a.len() != b.len() {
                return Err(Error::shape("bias gradients with different widths"));
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Zeroes the last layer so sigmoid/softmax outputs start uniform.
    pub fn zero_output_layer(&mut self) {
        if let (Some(w), Some(b)) = (self.weights.last_mut(), self.biases.last_mut()) {
            w.data_mut().fill(0.0);
            b.fill(0.0);
        }
    }
}

/// Multiplies every entry by `-coefficient`.
///
/// The encoder receives adversary-loss gradients through this so that it
/// ascends the losses the adversary heads descend.
pub fn reverse_gradient(grads: &GradSet, coefficient: f64) -> GradSet {
    let k = -coefficient;
    GradSet {
        weights: grads.weights.iter().map(|w| w.map(|v| v * k)).collect(),
        biases: grads
            .biases
            .iter()
            .map(|b| b.iter().map(|v| v * k).collect())
            .collect(),
    }
}

/// He-normal weights `N(0, 2/fan_in)` and zero biases, deterministic per seed.
pub fn init_params(spec: &MlpSpec, seed: u64) -> Result<MlpParams> {
    spec.validate()?;
    let mut rng = rng::from_seed(seed);
    init_params_with(spec, &mut rng)
}

pub fn init_params_with<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Result<MlpParams> {
    spec.validate()?;
    let mut params = MlpParams::zeros_like(spec);
    for (w, sizes) in params.weights.iter_mut().zip(spec.layer_sizes.windows(2)) {
        let std = (2.0 / sizes[0] as f64).sqrt();
        let dist = Normal::new(0.0, std).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        for v in w.data_mut() {
            *v = dist.sample(rng);
        }
    }
    Ok(params)
}

/// Everything [`backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `activations[0]` is the input; `activations[l + 1]` is layer `l`'s output.
    pub activations: Vec<Matrix>,
    pub pre_activations: Vec<Matrix>,
}

impl ForwardPass {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("forward pass has an input")
    }

    pub fn into_output(mut self) -> Matrix {
        self.activations.pop().expect("forward pass has an input")
    }
}

pub fn forward(params: &MlpParams, spec: &MlpSpec, x: &Matrix) -> Result<ForwardPass> {
    spec.validate()?;
    params.check_shapes(spec)?;
    if x.cols() != spec.input_width() {
        return Err(Error::shape(format!(
            "input has {} columns, network expects {}",
            x.cols(),
            spec.input_width()
        )));
    }
    let layers = spec.num_layers();
    let mut activations = Vec::with_capacity(layers + 1);
    let mut pre_activations = Vec::with_capacity(layers);
    activations.push(x.clone());
    for l in 0..layers {
        let mut z = activations[l].matmul(&params.weights[l])?;
        let bias = &params.biases[l];
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
        let last = l + 1 == layers;
        let y = if !last || spec.output == OutputKind::Embedding {
            let act = spec.hidden_activation;
            z.map(|v| act.apply(v))
        } else if spec.output == OutputKind::SigmoidBinary {
            z.map(sigmoid)
        } else {
            softmax_rows(&z)
        };
        pre_activations.push(z);
        activations.push(y);
    }
    Ok(ForwardPass {
        activations,
        pre_activations,
    })
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_rows(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Converts a gradient w.r.t. the network output into a gradient w.r.t. the
/// last layer's pre-activations by applying the output nonlinearity's Jacobian.
pub fn output_grad_to_logits(
    spec: &MlpSpec,
    pass: &ForwardPass,
    grad_output: &Matrix,
) -> Result<Matrix> {
    let out = pass.output();
    if out.shape() != grad_output.shape() {
        return Err(Error::shape("output gradient does not match the output"));
    }
    let mut g = grad_output.clone();
    match spec.output {
        OutputKind::SigmoidBinary => {
            for (gv, &p) in g.data_mut().iter_mut().zip(out.data()) {
                *gv *= p * (1.0 - p);
            }
        }
        OutputKind::Softmax => {
            for r in 0..g.rows() {
                let p = out.row(r);
                let dot: f64 = p.iter().zip(grad_output.row(r)).map(|(a, b)| a * b).sum();
                for (gv, &pk) in g.row_mut(r).iter_mut().zip(p) {
                    *gv = pk * (*gv - dot);
                }
            }
        }
        OutputKind::Embedding => {
            let act = spec.hidden_activation;
            let z = pass
                .pre_activations
                .last()
                .expect("forward pass has layers");
            for ((gv, &zv), &yv) in g.data_mut().iter_mut().zip(z.data()).zip(out.data()) {
                *gv *= act.derivative(zv, yv);
            }
        }
    }
    Ok(g)
}

/// Result of [`backward_with_input_grad`].
#[derive(Debug, Clone)]
pub struct Backprop {
    pub grads: GradSet,
    pub input_grad: Matrix,
}

/// Backpropagates a gradient w.r.t. the last layer's pre-activations.
///
/// The caller folds the batch mean into `grad_logits` (loss helpers in
/// [`super::loss`] already do), so the result is the gradient of the mean
/// batch loss.
pub fn backward(
    params: &MlpParams,
    spec: &MlpSpec,
    pass: &ForwardPass,
    grad_logits: &Matrix,
) -> Result<GradSet> {
    backprop(params, spec, pass, grad_logits, false).map(|b| b.grads)
}

/// Like [`backward`] but also returns the gradient w.r.t. the network input,
/// which is how head gradients reach the shared encoder.
pub fn backward_with_input_grad(
    params: &MlpParams,
    spec: &MlpSpec,
    pass: &ForwardPass,
    grad_logits: &Matrix,
) -> Result<Backprop> {
    backprop(params, spec, pass, grad_logits, true)
}

fn backprop(
    params: &MlpParams,
    spec: &MlpSpec,
    pass: &ForwardPass,
    grad_logits: &Matrix,
    want_input_grad: bool,
) -> Result<Backprop> {
    let layers = spec.num_layers();
    if pass.pre_activations.len() != layers || pass.activations.len() != layers + 1 {
        return Err(Error::MissingCache(format!(
            "cache holds {} layers, network has {layers}",
            pass.pre_activations.len()
        )));
    }
    params.check_shapes(spec)?;
    let batch = pass.activations[0].rows();
    if grad_logits.shape() != (batch, spec.output_width()) {
        return Err(Error::shape(format!(
            "gradient is {}x{}, output is {}x{}",
            grad_logits.rows(),
            grad_logits.cols(),
            batch,
            spec.output_width()
        )));
    }

    let mut grads = MlpParams::zeros_like(spec);
    let mut delta = grad_logits.clone();
    let act = spec.hidden_activation;
    for l in (0..layers).rev() {
        grads.weights[l] = pass.activations[l].t_matmul(&delta)?;
        let gb = &mut grads.biases[l];
        for r in 0..delta.rows() {
            for (g, d) in gb.iter_mut().zip(delta.row(r)) {
                *g += d;
            }
        }
        if l == 0 && !want_input_grad {
            break;
        }
        let mut prev = delta.matmul_t(&params.weights[l])?;
        if l > 0 {
            let z = &pass.pre_activations[l - 1];
            let y = &pass.activations[l];
            for ((g, &zv), &yv) in prev.data_mut().iter_mut().zip(z.data()).zip(y.data()) {
                *g *= act.derivative(zv, yv);
            }
        }
        delta = prev;
    }
    let input_grad = if want_input_grad {
        delta
    } else {
        Matrix::zeros(0, 0)
    };
    Ok(Backprop { grads, input_grad })
}

/// A network together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Network {
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        let params = init_params(&spec, seed)?;
        Ok(Self { spec, params })
    }

    pub fn forward(&self, x: &Matrix) -> Result<ForwardPass> {
        forward(&self.params, &self.spec, x)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.forward(x).map(ForwardPass::into_output)
    }

    pub fn backward(&self, pass: &ForwardPass, grad_logits: &Matrix) -> Result<GradSet> {
        backward(&self.params, &self.spec, pass, grad_logits)
    }

    pub fn backward_with_input_grad(
        &self,
        pass: &ForwardPass,
        grad_logits: &Matrix,
    ) -> Result<Backprop> {
        backward_with_input_grad(&self.params, &self.spec, pass, grad_logits)
    }
}
