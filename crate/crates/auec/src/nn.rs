//! Dense feed-forward autoencoder with manual forward/backward passes and an
//! adaptive-moment optimizer.
//!
//! The backward pass has two gradient heads: an upstream gradient at the
//! latent layer (the clustering-loss path) and one at the reconstruction
//! output (the MSE path). Either or both may be supplied; the contributions
//! add at the latent layer, which is exactly the chain rule for a joint loss
//! of the form `lambda * f(encode(x)) + g(decode(encode(x)))`.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::matmul;
use crate::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 4] = b"AEC\x01";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the post-activation value, which is all
    /// the backward pass keeps around.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Linear),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Sigmoid),
            other => Err(Error::Data(format!("unknown activation tag {other}"))),
        }
    }
}

/// One dense layer: `a = act(x W + b)` with `W` stored input x output.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct AutoencoderModel {
    encoder: Vec<Layer>,
    decoder: Vec<Layer>,
}

impl AutoencoderModel {
    /// Builds the default dense architecture: encoder
    /// `input -> hidden... -> latent` with ReLU on hidden layers and a linear
    /// latent, decoder mirrored with a sigmoid output (pixel data lives in
    /// [0,1]). Weights are uniform fan-in/fan-out scaled, biases zero.
    pub fn dense(input_dim: usize, hidden: &[usize], latent_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || latent_dim == 0 {
            return Err(Error::Config("layer widths must be >= 1".into()));
        }
        if hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden widths must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut enc_dims = vec![input_dim];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(latent_dim);
        let mut dec_dims = vec![latent_dim];
        dec_dims.extend(hidden.iter().rev());
        dec_dims.push(input_dim);

        let build = |dims: &[usize], last_act: Activation, rng: &mut ChaCha8Rng| {
            let mut layers = Vec::with_capacity(dims.len() - 1);
            for w in dims.windows(2) {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut weights = Array2::zeros((fan_in, fan_out));
                for v in weights.iter_mut() {
                    *v = rng.random_range(-limit..limit);
                }
                let activation = if layers.len() + 2 == dims.len() {
                    last_act
                } else {
                    Activation::Relu
                };
                layers.push(Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                    activation,
                });
            }
            layers
        };

        let encoder = build(&enc_dims, Activation::Linear, &mut rng);
        let decoder = build(&dec_dims, Activation::Sigmoid, &mut rng);
        Self::from_layers(encoder, decoder)
    }

    /// Validates shape chaining: consecutive layers must connect, the encoder
    /// output must match the decoder input, and the decoder must map back to
    /// the input width.
    pub fn from_layers(encoder: Vec<Layer>, decoder: Vec<Layer>) -> Result<Self> {
        if encoder.is_empty() || decoder.is_empty() {
            return Err(Error::Config("encoder and decoder need >= 1 layer".into()));
        }
        for stack in [&encoder, &decoder] {
            for pair in stack.windows(2) {
                if pair[0].output_dim() != pair[1].input_dim() {
                    return Err(Error::Shape(format!(
                        "layer widths do not chain: {} -> {}",
                        pair[0].output_dim(),
                        pair[1].input_dim()
                    )));
                }
            }
            for layer in stack {
                if layer.bias.len() != layer.output_dim() {
                    return Err(Error::Shape("bias width mismatch".into()));
                }
                if layer.weights.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Data("non-finite parameter".into()));
                }
            }
        }
        let latent = encoder.last().unwrap().output_dim();
        if decoder[0].input_dim() != latent {
            return Err(Error::Shape(format!(
                "decoder input {} does not match latent width {latent}",
                decoder[0].input_dim()
            )));
        }
        if decoder.last().unwrap().output_dim() != encoder[0].input_dim() {
            return Err(Error::Shape(format!(
                "decoder output {} does not match input width {}",
                decoder.last().unwrap().output_dim(),
                encoder[0].input_dim()
            )));
        }
        Ok(AutoencoderModel { encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().unwrap().output_dim()
    }

    pub fn encoder(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[Layer] {
        &self.decoder
    }

    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "encode expects {} columns, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(forward_cached(&self.encoder, x).pop().unwrap())
    }

    pub fn decode(&self, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        if y.ncols() != self.latent_dim() {
            return Err(Error::Shape(format!(
                "decode expects {} columns, got {}",
                self.latent_dim(),
                y.ncols()
            )));
        }
        Ok(forward_cached(&self.decoder, y).pop().unwrap())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Versioned binary checkpoint. Parameters are stored as raw little-endian
    /// f64 bits, so a load reproduces encode outputs bit-identically.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.encoder.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.decoder.len() as u32).to_le_bytes());
        for layer in self.encoder.iter().chain(self.decoder.iter()) {
            out.extend_from_slice(&(layer.input_dim() as u32).to_le_bytes());
            out.extend_from_slice(&(layer.output_dim() as u32).to_le_bytes());
            out.push(layer.activation.tag());
            for v in layer.weights.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for v in layer.bias.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = ByteReader::new(bytes);
        let magic = reader.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Data("bad checkpoint magic".into()));
        }
        let version = reader.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let n_enc = reader.u32()? as usize;
        let n_dec = reader.u32()? as usize;
        if n_enc == 0 || n_dec == 0 || n_enc > 64 || n_dec > 64 {
            return Err(Error::Data(format!(
                "implausible layer counts {n_enc}/{n_dec} in checkpoint"
            )));
        }
        let mut read_stack = |count: usize| -> Result<Vec<Layer>> {
            let mut layers = Vec::with_capacity(count);
            for _ in 0..count {
                let input = reader.u32()? as usize;
                let output = reader.u32()? as usize;
                let activation = Activation::from_tag(reader.u8()?)?;
                let params = input
                    .checked_mul(output)
                    .and_then(|p| p.checked_add(output))
                    .ok_or_else(|| Error::Data("checkpoint layer size overflow".into()))?;
                // size check before any allocation
                reader.ensure(params.checked_mul(8).ok_or_else(|| {
                    Error::Data("checkpoint layer size overflow".into())
                })?)?;
                let mut weights = Array2::zeros((input, output));
                for v in weights.iter_mut() {
                    *v = reader.f64()?;
                }
                let mut bias = Array1::zeros(output);
                for v in bias.iter_mut() {
                    *v = reader.f64()?;
                }
                layers.push(Layer {
                    weights,
                    bias,
                    activation,
                });
            }
            Ok(layers)
        };
        let encoder = read_stack(n_enc)?;
        let decoder = read_stack(n_dec)?;
        if !reader.is_empty() {
            return Err(Error::Data("trailing bytes after checkpoint".into()));
        }
        Self::from_layers(encoder, decoder)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    fn ensure(&self, len: usize) -> Result<()> {
        if self.pos.checked_add(len).is_none_or(|end| end > self.bytes.len()) {
            return Err(Error::Data("truncated checkpoint".into()));
        }
        Ok(())
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        self.ensure(len)?;
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }

    fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

/// Mean squared reconstruction error, normalized by the row count only:
/// `(1/N) * sum_i ||x_i - xhat_i||^2`.
pub fn mse(x: ArrayView2<f64>, xhat: ArrayView2<f64>) -> Result<f64> {
    if x.dim() != xhat.dim() {
        return Err(Error::Shape(format!(
            "mse shapes differ: {:?} vs {:?}",
            x.dim(),
            xhat.dim()
        )));
    }
    let mut total = 0.0;
    for (a, b) in x.iter().zip(xhat.iter()) {
        let d = a - b;
        total += d * d;
    }
    Ok(total / x.nrows() as f64)
}

/// Per-layer parameter gradients, shapes mirroring the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub encoder: Vec<(Array2<f64>, Array1<f64>)>,
    pub decoder: Vec<(Array2<f64>, Array1<f64>)>,
}

// Input plus every post-activation, so `out[0]` is the input and
// `out.last()` the stack output.
fn forward_cached(layers: &[Layer], input: ArrayView2<f64>) -> Vec<Array2<f64>> {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(input.to_owned());
    for layer in layers {
        let mut z = matmul(acts.last().unwrap().view(), layer.weights.view());
        for mut row in z.rows_mut() {
            for (v, b) in row.iter_mut().zip(layer.bias.iter()) {
                *v = layer.activation.apply(*v + b);
            }
        }
        acts.push(z);
    }
    acts
}

// Backprop through one stack. `upstream` is dLoss/d(stack output); returns
// per-layer gradients plus dLoss/d(stack input).
fn backprop_stack(
    layers: &[Layer],
    acts: &[Array2<f64>],
    upstream: Array2<f64>,
) -> (Vec<(Array2<f64>, Array1<f64>)>, Array2<f64>) {
    let mut grads = vec![(Array2::zeros((0, 0)), Array1::zeros(0)); layers.len()];
    let mut delta = upstream;
    for (l, layer) in layers.iter().enumerate().rev() {
        let out_act = &acts[l + 1];
        // dLoss/dz through the activation derivative
        let mut dz = delta;
        for (v, a) in dz.iter_mut().zip(out_act.iter()) {
            *v *= layer.activation.derivative_from_output(*a);
        }
        let dw = matmul(acts[l].t(), dz.view());
        let db = dz.sum_axis(Axis(0));
        delta = matmul(dz.view(), layer.weights.t());
        grads[l] = (dw, db);
    }
    (grads, delta)
}

/// Exact parameter gradients of a scalar loss whose partial derivatives with
/// respect to the latent code and/or the reconstruction output are supplied.
/// The output-side gradient flows through the decoder and adds to the
/// latent-side gradient at the bottleneck before continuing through the
/// encoder. At least one head must be present.
pub fn backward(
    model: &AutoencoderModel,
    x: ArrayView2<f64>,
    latent_grad: Option<ArrayView2<f64>>,
    output_grad: Option<ArrayView2<f64>>,
) -> Result<Gradients> {
    if latent_grad.is_none() && output_grad.is_none() {
        return Err(Error::Config(
            "backward needs at least one upstream gradient".into(),
        ));
    }
    if x.ncols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "backward expects {} input columns, got {}",
            model.input_dim(),
            x.ncols()
        )));
    }
    let n = x.nrows();
    let latent_dim = model.latent_dim();
    if let Some(g) = latent_grad {
        if g.dim() != (n, latent_dim) {
            return Err(Error::Shape(format!(
                "latent gradient shape {:?}, expected ({n}, {latent_dim})",
                g.dim()
            )));
        }
    }
    if let Some(g) = output_grad {
        if g.dim() != (n, model.input_dim()) {
            return Err(Error::Shape(format!(
                "output gradient shape {:?}, expected ({n}, {})",
                g.dim(),
                model.input_dim()
            )));
        }
    }

    let enc_acts = forward_cached(&model.encoder, x);
    let latent = enc_acts.last().unwrap().clone();

    let (dec_grads, mut latent_total) = match output_grad {
        Some(og) => {
            let dec_acts = forward_cached(&model.decoder, latent.view());
            backprop_stack(&model.decoder, &dec_acts, og.to_owned())
        }
        None => {
            let zero_grads = model
                .decoder
                .iter()
                .map(|l| {
                    (
                        Array2::zeros((l.input_dim(), l.output_dim())),
                        Array1::zeros(l.output_dim()),
                    )
                })
                .collect();
            (zero_grads, Array2::zeros((n, latent_dim)))
        }
    };
    if let Some(lg) = latent_grad {
        latent_total += &lg;
    }
    let (enc_grads, _) = backprop_stack(&model.encoder, &enc_acts, latent_total);

    let grads = Gradients {
        encoder: enc_grads,
        decoder: dec_grads,
    };
    for (w, b) in grads.encoder.iter().chain(grads.decoder.iter()) {
        if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite gradient detected".into()));
        }
    }
    Ok(grads)
}

/// Adam state: first/second moment accumulators mirroring the parameters,
/// plus the step counter and hyper-parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    m: Gradients,
    v: Gradients,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(model: &AutoencoderModel, learning_rate: f64) -> Self {
        let zeros = |layers: &[Layer]| -> Vec<(Array2<f64>, Array1<f64>)> {
            layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros((l.input_dim(), l.output_dim())),
                        Array1::zeros(l.output_dim()),
                    )
                })
                .collect()
        };
        OptimizerState {
            m: Gradients {
                encoder: zeros(&model.encoder),
                decoder: zeros(&model.decoder),
            },
            v: Gradients {
                encoder: zeros(&model.encoder),
                decoder: zeros(&model.decoder),
            },
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected adaptive-moment update.
pub fn optimizer_step(
    model: &mut AutoencoderModel,
    state: &mut OptimizerState,
    grads: &Gradients,
) -> Result<()> {
    if grads.encoder.len() != model.encoder.len() || grads.decoder.len() != model.decoder.len() {
        return Err(Error::Shape("gradient layer count mismatch".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let lr = state.learning_rate;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);

    let update = |param: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *param -= lr * m_hat / (v_hat.sqrt() + eps);
    };

    for (stack, m_stack, v_stack, g_stack) in [
        (
            &mut model.encoder,
            &mut state.m.encoder,
            &mut state.v.encoder,
            &grads.encoder,
        ),
        (
            &mut model.decoder,
            &mut state.m.decoder,
            &mut state.v.decoder,
            &grads.decoder,
        ),
    ] {
        for (l, layer) in stack.iter_mut().enumerate() {
            if layer.weights.dim() != g_stack[l].0.dim() || layer.bias.dim() != g_stack[l].1.dim() {
                return Err(Error::Shape(format!("gradient shape mismatch at layer {l}")));
            }
            for ((p, m), (v, g)) in layer
                .weights
                .iter_mut()
                .zip(m_stack[l].0.iter_mut())
                .zip(v_stack[l].0.iter_mut().zip(g_stack[l].0.iter()))
            {
                update(p, m, v, *g);
            }
            for ((p, m), (v, g)) in layer
                .bias
                .iter_mut()
                .zip(m_stack[l].1.iter_mut())
                .zip(v_stack[l].1.iter_mut().zip(g_stack[l].1.iter()))
            {
                update(p, m, v, *g);
            }
            if layer
                .weights
                .iter()
                .chain(layer.bias.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::Numeric("non-finite parameter after update".into()));
            }
        }
    }
    Ok(())
}
