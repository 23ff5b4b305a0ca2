//! Fully-connected softmax classifier with hand-written backprop and Adam.
//!
//! Hidden layers use `tanh`; the output layer is a linear map followed by a
//! softmax. All arithmetic is `f64`. Weights for layer `l` are stored as an
//! `[in, out]` matrix so a batch forward pass is `h.dot(w) + b`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Lower bound applied to probabilities before taking logarithms, and to
/// softmax outputs so every class keeps strictly positive mass.
pub const PROB_FLOOR: f64 = 1e-12;

/// Parameters of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    layer_dims: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Gradients shaped like [`NetParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Intermediate values of a forward pass, consumed by [`backprop`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input batch; `activations[l]` is the output of
    /// hidden layer `l`. The final logits are not stored here.
    activations: Vec<Array2<f64>>,
    probs: Array2<f64>,
}

impl ForwardCache {
    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn batch_size(&self) -> usize {
        self.probs.nrows()
    }
}

/// Adam moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl NetParams {
    /// Builds parameters from explicit matrices. Each weight matrix is `[in, out]`.
    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::dim("need one bias vector per weight matrix"));
        }
        let mut layer_dims = vec![weights[0].nrows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.nrows() != *layer_dims.last().unwrap() {
                return Err(Error::dim(format!("layer {l} input width does not compose")));
            }
            if b.len() != w.ncols() {
                return Err(Error::dim(format!("layer {l} bias length {} != {}", b.len(), w.ncols())));
            }
            layer_dims.push(w.ncols());
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
        })
    }

    /// All-zero network of the given shape.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        let weights = layer_dims
            .windows(2)
            .map(|w| Array2::zeros((w[0], w[1])))
            .collect();
        let biases = layer_dims[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    /// Reads parameter `idx` in flat order (per layer: weights row-major, then biases).
    pub fn get_flat(&self, idx: usize) -> f64 {
        let (l, off, is_bias) = self.locate(idx);
        if is_bias {
            self.biases[l][off]
        } else {
            let cols = self.weights[l].ncols();
            self.weights[l][[off / cols, off % cols]]
        }
    }

    /// Writes parameter `idx` in the same flat order as [`NetParams::get_flat`].
    pub fn set_flat(&mut self, idx: usize, value: f64) {
        let (l, off, is_bias) = self.locate(idx);
        if is_bias {
            self.biases[l][off] = value;
        } else {
            let cols = self.weights[l].ncols();
            self.weights[l][[off / cols, off % cols]] = value;
        }
    }

    fn locate(&self, mut idx: usize) -> (usize, usize, bool) {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if idx < w.len() {
                return (l, idx, false);
            }
            idx -= w.len();
            if idx < b.len() {
                return (l, idx, true);
            }
            idx -= b.len();
        }
        panic!("flat parameter index out of range");
    }
}

impl NetGrads {
    /// Flattened in the order used by [`NetParams::get_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }
}

impl AdamState {
    pub fn new(params: &NetParams) -> Self {
        Self::with_betas(params, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(params: &NetParams, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zw: Vec<_> = params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let zb: Vec<_> = params.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        Self {
            m_w: zw.clone(),
            v_w: zw,
            m_b: zb.clone(),
            v_b: zb,
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::config(
            "layer_dims needs at least an input and an output width",
        ));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::config("layer widths must be positive"));
    }
    Ok(())
}

/// Random initialization: zero biases, weights `N(0, 1) / sqrt(fan_in)`.
pub fn init_params(layer_dims: &[usize], seed: u64) -> Result<NetParams> {
    validate_dims(layer_dims)?;
    let mut rng = rng_from(seed);
    let weights = layer_dims
        .windows(2)
        .map(|w| {
            let scale = 1.0 / (w[0] as f64).sqrt();
            Array2::from_shape_simple_fn((w[0], w[1]), || {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
        })
        .collect();
    let biases = layer_dims[1..].iter().map(|&n| Array1::zeros(n)).collect();
    Ok(NetParams {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
    })
}

/// Row-wise softmax with max subtraction; entries are floored at [`PROB_FLOOR`].
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| (v / sum).max(PROB_FLOOR));
    }
    out
}

/// Forward pass over a `[B, d]` batch. Returns `[B, C]` class probabilities.
pub fn forward(params: &NetParams, features: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache)> {
    if features.ncols() != params.input_dim() {
        return Err(Error::dim(format!(
            "feature width {} != network input {}",
            features.ncols(),
            params.input_dim()
        )));
    }
    let last = params.weights.len() - 1;
    let mut activations = Vec::with_capacity(params.weights.len());
    activations.push(features.to_owned());
    let mut logits = None;
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let mut z = activations[l].dot(w);
        z += b;
        if l == last {
            logits = Some(z);
        } else {
            z.mapv_inplace(f64::tanh);
            activations.push(z);
        }
    }
    let probs = softmax_rows(&logits.unwrap());
    let cache = ForwardCache {
        activations,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Probabilities only, without keeping a cache.
pub fn predict_proba(params: &NetParams, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    forward(params, features).map(|(p, _)| p)
}

/// Argmax class per row; ties resolve to the lowest class index.
pub fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Chain rule from the logit gradient `[B, C]` back to every parameter.
/// Gradients are summed over the batch.
pub fn backprop(params: &NetParams, cache: &ForwardCache, dloss_dlogits: &Array2<f64>) -> Result<NetGrads> {
    if dloss_dlogits.dim() != cache.probs.dim() {
        return Err(Error::dim(format!(
            "logit gradient shape {:?} != forward output {:?}",
            dloss_dlogits.dim(),
            cache.probs.dim()
        )));
    }
    if cache.activations.len() != params.weights.len()
        || cache.activations[0].ncols() != params.input_dim()
        || cache.probs.ncols() != params.num_classes()
    {
        return Err(Error::dim("forward cache does not match network shape"));
    }
    let n_layers = params.weights.len();
    let mut weights = vec![Array2::zeros((0, 0)); n_layers];
    let mut biases = vec![Array1::zeros(0); n_layers];
    let mut delta = dloss_dlogits.clone();
    for l in (0..n_layers).rev() {
        let input = &cache.activations[l];
        weights[l] = input.t().dot(&delta);
        biases[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut upstream = delta.dot(&params.weights[l].t());
            // tanh'(z) = 1 - tanh(z)^2, and activations[l] holds tanh(z).
            Zip::from(&mut upstream)
                .and(input)
                .for_each(|g, &h| *g *= 1.0 - h * h);
            delta = upstream;
        }
    }
    Ok(NetGrads { weights, biases })
}

/// One Adam update in place. Fails before touching anything if a gradient
/// entry is non-finite.
pub fn adam_step(params: &mut NetParams, grads: &NetGrads, state: &mut AdamState, lr: f64) -> Result<()> {
    if grads.weights.len() != params.weights.len() || state.m_w.len() != params.weights.len() {
        return Err(Error::dim("gradient/state layer count does not match parameters"));
    }
    for (l, (gw, gb)) in grads.weights.iter().zip(&grads.biases).enumerate() {
        if gw.dim() != params.weights[l].dim() || gb.dim() != params.biases[l].dim() {
            return Err(Error::dim(format!("gradient shape mismatch in layer {l}")));
        }
        if !gw.iter().chain(gb.iter()).all(|v| v.is_finite()) {
            return Err(Error::Numeric { layer: l, batch: None });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for l in 0..params.weights.len() {
        Zip::from(&mut params.weights[l])
            .and(&mut state.m_w[l])
            .and(&mut state.v_w[l])
            .and(&grads.weights[l])
            .for_each(|p, m, v, &g| update(p, m, v, g));
        Zip::from(&mut params.biases[l])
            .and(&mut state.m_b[l])
            .and(&mut state.v_b[l])
            .and(&grads.biases[l])
            .for_each(|p, m, v, &g| update(p, m, v, g));
    }
    Ok(())
}
