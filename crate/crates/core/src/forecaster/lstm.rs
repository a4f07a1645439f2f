//! Two stacked LSTM layers, a ReLU dense layer and a sigmoid scalar head,
//! with hand-written backpropagation through time.
//!
//! Per time step and layer, with gate order `i, f, g, o`:
//!
//! ```text
//! a_t = W x_t + U h_{t-1} + b
//! i = σ(a_i)  f = σ(a_f)  g = tanh(a_g)  o = σ(a_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! Layer 1 emits its whole `(window, hidden)` sequence; inverted dropout is
//! applied to it in train mode before layer 2 reads it. Layer 2's last hidden
//! state (also dropped out in train mode) feeds the dense layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scaler::MinMaxScaler;
use crate::matrix::Matrix;
use crate::rng::{self, Domain};
use crate::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `4·hidden × input`.
    pub w_input: Matrix,
    /// `4·hidden × hidden`.
    pub w_recurrent: Matrix,
    /// `4·hidden`.
    pub bias: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w_input: Matrix::zeros(4 * hidden_dim, input_dim),
            w_recurrent: Matrix::zeros(4 * hidden_dim, hidden_dim),
            bias: vec![0.0; 4 * hidden_dim],
        }
    }

    /// Glorot-uniform kernels, forget-gate bias 1.
    fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        glorot(&mut p.w_input, input_dim, 4 * hidden_dim, rng);
        glorot(&mut p.w_recurrent, hidden_dim, 4 * hidden_dim, rng);
        p.bias[hidden_dim..2 * hidden_dim].fill(1.0);
        p
    }

    fn check(&self) -> Result<()> {
        let h4 = 4 * self.hidden_dim;
        if self.w_input.shape() != (h4, self.input_dim)
            || self.w_recurrent.shape() != (h4, self.hidden_dim)
            || self.bias.len() != h4
        {
            return Err(Error::Invalid(format!(
                "LSTM layer tensors inconsistent with input {} hidden {}",
                self.input_dim, self.hidden_dim
            )));
        }
        Ok(())
    }
}

fn glorot(m: &mut Matrix, fan_in: usize, fan_out: usize, rng: &mut impl Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in m.as_mut_slice() {
        *v = rng.random_range(-limit..limit);
    }
}

/// Every trainable tensor of the network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layer1: LstmLayerParams,
    pub layer2: LstmLayerParams,
    /// `dense × hidden`.
    pub dense_w: Matrix,
    pub dense_b: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl Params {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            layer1: LstmLayerParams::zeros(1, cfg.hidden_dim),
            layer2: LstmLayerParams::zeros(cfg.hidden_dim, cfg.hidden_dim),
            dense_w: Matrix::zeros(cfg.dense_dim, cfg.hidden_dim),
            dense_b: vec![0.0; cfg.dense_dim],
            head_w: vec![0.0; cfg.dense_dim],
            head_b: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layer1: LstmLayerParams::zeros(self.layer1.input_dim, self.layer1.hidden_dim),
            layer2: LstmLayerParams::zeros(self.layer2.input_dim, self.layer2.hidden_dim),
            dense_w: Matrix::zeros(self.dense_w.rows(), self.dense_w.cols()),
            dense_b: vec![0.0; self.dense_b.len()],
            head_w: vec![0.0; self.head_w.len()],
            head_b: 0.0,
        }
    }

    /// Tensors in a fixed order; the optimizer and gradient checks rely on it.
    pub fn tensors(&self) -> [&[f64]; 10] {
        [
            self.layer1.w_input.as_slice(),
            self.layer1.w_recurrent.as_slice(),
            &self.layer1.bias,
            self.layer2.w_input.as_slice(),
            self.layer2.w_recurrent.as_slice(),
            &self.layer2.bias,
            self.dense_w.as_slice(),
            &self.dense_b,
            &self.head_w,
            std::slice::from_ref(&self.head_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 10] {
        [
            self.layer1.w_input.as_mut_slice(),
            self.layer1.w_recurrent.as_mut_slice(),
            &mut self.layer1.bias,
            self.layer2.w_input.as_mut_slice(),
            self.layer2.w_recurrent.as_mut_slice(),
            &mut self.layer2.bias,
            self.dense_w.as_mut_slice(),
            &mut self.dense_b,
            &mut self.head_w,
            std::slice::from_mut(&mut self.head_b),
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub window: usize,
    pub hidden_dim: usize,
    pub dense_dim: usize,
    pub dropout_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            window: 50,
            hidden_dim: 256,
            dense_dim: 256,
            dropout_rate: 0.3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden_dim == 0 || self.dense_dim == 0 {
            return Err(Error::Invalid(
                "window, hidden_dim and dense_dim must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Invalid(format!(
                "dropout_rate {} not in [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub config: ModelConfig,
    pub params: Params,
    pub scaler: Option<MinMaxScaler>,
}

/// Inverted-dropout multipliers (0 or `1/(1-rate)`).
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    /// `window × hidden`, applied to layer 1's output sequence.
    pub layer1: Vec<Vec<f64>>,
    /// `hidden`, applied to layer 2's last hidden state.
    pub layer2: Vec<f64>,
}

impl DropoutMasks {
    pub fn sample(cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let keep = 1.0 - cfg.dropout_rate;
        let scale = 1.0 / keep;
        let mut draw = || {
            if rng.random::<f64>() < cfg.dropout_rate {
                0.0
            } else {
                scale
            }
        };
        let layer1 = (0..cfg.window)
            .map(|_| (0..cfg.hidden_dim).map(|_| draw()).collect())
            .collect();
        let layer2 = (0..cfg.hidden_dim).map(|_| draw()).collect();
        Self { layer1, layer2 }
    }

    /// Drop-nothing masks; train mode with these equals infer mode.
    pub fn ones(cfg: &ModelConfig) -> Self {
        Self {
            layer1: vec![vec![1.0; cfg.hidden_dim]; cfg.window],
            layer2: vec![1.0; cfg.hidden_dim],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Infer,
    Train(&'a DropoutMasks),
}

#[derive(Debug, Clone)]
struct LayerCache {
    xs: Vec<Vec<f64>>,
    /// Post-activation gates `[i | f | g | o]` per step.
    gates: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    tanh_cs: Vec<Vec<f64>>,
    hs: Vec<Vec<f64>>,
}

fn layer_forward(p: &LstmLayerParams, xs: Vec<Vec<f64>>) -> LayerCache {
    let h = p.hidden_dim;
    let steps = xs.len();
    let mut cache = LayerCache {
        gates: Vec::with_capacity(steps),
        cs: Vec::with_capacity(steps),
        tanh_cs: Vec::with_capacity(steps),
        hs: Vec::with_capacity(steps),
        xs,
    };
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    for t in 0..steps {
        let mut a = p.bias.clone();
        p.w_input.gemv_acc(&cache.xs[t], &mut a);
        p.w_recurrent.gemv_acc(&h_prev, &mut a);
        for v in &mut a[..2 * h] {
            *v = sigmoid(*v);
        }
        for v in &mut a[2 * h..3 * h] {
            *v = v.tanh();
        }
        for v in &mut a[3 * h..] {
            *v = sigmoid(*v);
        }
        let mut c = vec![0.0; h];
        let mut tc = vec![0.0; h];
        let mut hh = vec![0.0; h];
        for j in 0..h {
            c[j] = a[h + j] * c_prev[j] + a[j] * a[2 * h + j];
            tc[j] = c[j].tanh();
            hh[j] = a[3 * h + j] * tc[j];
        }
        cache.gates.push(a);
        h_prev.clone_from(&hh);
        c_prev.clone_from(&c);
        cache.cs.push(c);
        cache.tanh_cs.push(tc);
        cache.hs.push(hh);
    }
    cache
}

/// Accumulates parameter gradients into `g` and returns `dL/dx_t` when
/// `want_dx` is set. `dh_out[t]` is the gradient reaching `h_t` from above.
fn layer_backward(
    p: &LstmLayerParams,
    cache: &LayerCache,
    dh_out: &[Vec<f64>],
    g: &mut LstmLayerParams,
    want_dx: bool,
) -> Vec<Vec<f64>> {
    let h = p.hidden_dim;
    let steps = cache.xs.len();
    let mut dxs = if want_dx {
        vec![vec![0.0; p.input_dim]; steps]
    } else {
        Vec::new()
    };
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let zeros = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    for t in (0..steps).rev() {
        let gates = &cache.gates[t];
        let c_prev = if t > 0 { &cache.cs[t - 1] } else { &zeros };
        let h_prev = if t > 0 { &cache.hs[t - 1] } else { &zeros };
        let tc = &cache.tanh_cs[t];
        for j in 0..h {
            let (i, f, gg, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let dh = dh_out[t][j] + dh_next[j];
            let dc = dc_next[j] + dh * o * (1.0 - tc[j] * tc[j]);
            da[j] = dc * gg * i * (1.0 - i);
            da[h + j] = dc * c_prev[j] * f * (1.0 - f);
            da[2 * h + j] = dc * i * (1.0 - gg * gg);
            da[3 * h + j] = dh * tc[j] * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        g.w_input.add_outer(&da, &cache.xs[t]);
        g.w_recurrent.add_outer(&da, h_prev);
        for (b, d) in g.bias.iter_mut().zip(&da) {
            *b += d;
        }
        dh_next.fill(0.0);
        p.w_recurrent.gemv_t_acc(&da, &mut dh_next);
        if want_dx {
            p.w_input.gemv_t_acc(&da, &mut dxs[t]);
        }
    }
    dxs
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer1: LayerCache,
    layer1_out: Vec<Vec<f64>>,
    layer2: LayerCache,
    last: Vec<f64>,
    mask2: Option<Vec<f64>>,
    mask1: Option<Vec<Vec<f64>>>,
    dense_pre: Vec<f64>,
    dense_out: Vec<f64>,
    pub output: f64,
}

impl ForwardCache {
    /// Shape of layer 1's output sequence, `(window, hidden)`.
    pub fn layer1_output_shape(&self) -> (usize, usize) {
        (
            self.layer1_out.len(),
            self.layer1_out.first().map_or(0, Vec::len),
        )
    }

    /// Layer 1's output sequence after dropout.
    pub fn layer1_output(&self) -> &[Vec<f64>] {
        &self.layer1_out
    }
}

impl LstmModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, Domain::WeightInit, 0);
        let layer1 = LstmLayerParams::init(1, config.hidden_dim, &mut rng);
        let layer2 = LstmLayerParams::init(config.hidden_dim, config.hidden_dim, &mut rng);
        let mut dense_w = Matrix::zeros(config.dense_dim, config.hidden_dim);
        glorot(&mut dense_w, config.hidden_dim, config.dense_dim, &mut rng);
        let mut head = Matrix::zeros(1, config.dense_dim);
        glorot(&mut head, config.dense_dim, 1, &mut rng);
        Ok(Self {
            config,
            params: Params {
                layer1,
                layer2,
                dense_w,
                dense_b: vec![0.0; config.dense_dim],
                head_w: head.as_slice().to_vec(),
                head_b: 0.0,
            },
            scaler: None,
        })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            params: Params::zeros(&config),
            config,
            scaler: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let cfg = &self.config;
        let p = &self.params;
        p.layer1.check()?;
        p.layer2.check()?;
        if p.layer1.input_dim != 1
            || p.layer1.hidden_dim != cfg.hidden_dim
            || p.layer2.input_dim != cfg.hidden_dim
            || p.layer2.hidden_dim != cfg.hidden_dim
            || p.dense_w.shape() != (cfg.dense_dim, cfg.hidden_dim)
            || p.dense_b.len() != cfg.dense_dim
            || p.head_w.len() != cfg.dense_dim
        {
            return Err(Error::Invalid(
                "model tensors do not match the model config".into(),
            ));
        }
        if !p.all_finite() {
            return Err(Error::Numerical(
                "model contains non-finite parameters".into(),
            ));
        }
        if let Some(s) = &self.scaler {
            MinMaxScaler::new(s.min, s.max)?;
        }
        Ok(())
    }

    /// Runs one scaled sequence through the network.
    pub fn forward(&self, input: &[f64], mode: Mode<'_>) -> Result<ForwardCache> {
        let cfg = &self.config;
        if input.len() != cfg.window {
            return Err(Error::Invalid(format!(
                "input length {} does not match window {}",
                input.len(),
                cfg.window
            )));
        }
        let p = &self.params;
        let layer1 = layer_forward(&p.layer1, input.iter().map(|&x| vec![x]).collect());

        let (mask1, mask2) = match mode {
            Mode::Infer => (None, None),
            Mode::Train(m) => {
                if m.layer1.len() != cfg.window
                    || m.layer1.iter().any(|r| r.len() != cfg.hidden_dim)
                    || m.layer2.len() != cfg.hidden_dim
                {
                    return Err(Error::Invalid(
                        "dropout masks do not match the model".into(),
                    ));
                }
                (Some(m.layer1.clone()), Some(m.layer2.clone()))
            }
        };
        let layer1_out: Vec<Vec<f64>> = match &mask1 {
            None => layer1.hs.clone(),
            Some(m) => layer1
                .hs
                .iter()
                .zip(m)
                .map(|(h, m)| h.iter().zip(m).map(|(a, b)| a * b).collect())
                .collect(),
        };
        if layer1_out.len() != cfg.window || layer1_out.iter().any(|r| r.len() != cfg.hidden_dim) {
            return Err(Error::Invalid(format!(
                "layer 1 output shape differs from ({}, {})",
                cfg.window, cfg.hidden_dim
            )));
        }

        let layer2 = layer_forward(&p.layer2, layer1_out.clone());
        let h_last = layer2.hs.last().expect("window > 0");
        let last: Vec<f64> = match &mask2 {
            None => h_last.clone(),
            Some(m) => h_last.iter().zip(m).map(|(a, b)| a * b).collect(),
        };
        let mut dense_pre = p.dense_b.clone();
        p.dense_w.gemv_acc(&last, &mut dense_pre);
        let dense_out: Vec<f64> = dense_pre.iter().map(|&z| z.max(0.0)).collect();
        let s = p.head_b + crate::matrix::dot(&p.head_w, &dense_out);
        let output = sigmoid(s);
        if !output.is_finite() || dense_out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "non-finite activation in forward pass".into(),
            ));
        }
        Ok(ForwardCache {
            layer1,
            layer1_out,
            layer2,
            last,
            mask1,
            mask2,
            dense_pre,
            dense_out,
            output,
        })
    }

    pub fn predict_scaled(&self, input: &[f64]) -> Result<f64> {
        Ok(self.forward(input, Mode::Infer)?.output)
    }

    /// Accumulates `d_output · ∂output/∂θ` into `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_output: f64, grads: &mut Params) {
        let p = &self.params;
        let ds = d_output * cache.output * (1.0 - cache.output);
        grads.head_b += ds;
        for (g, a) in grads.head_w.iter_mut().zip(&cache.dense_out) {
            *g += ds * a;
        }
        let dz: Vec<f64> = p
            .head_w
            .iter()
            .zip(&cache.dense_pre)
            .map(|(w, &z)| if z > 0.0 { ds * w } else { 0.0 })
            .collect();
        grads.dense_w.add_outer(&dz, &cache.last);
        for (g, d) in grads.dense_b.iter_mut().zip(&dz) {
            *g += d;
        }
        let mut d_last = vec![0.0; self.config.hidden_dim];
        p.dense_w.gemv_t_acc(&dz, &mut d_last);
        if let Some(m) = &cache.mask2 {
            d_last.iter_mut().zip(m).for_each(|(d, m)| *d *= m);
        }

        let steps = self.config.window;
        let mut dh2 = vec![vec![0.0; self.config.hidden_dim]; steps];
        dh2[steps - 1] = d_last;
        let mut d_l1_out = layer_backward(&p.layer2, &cache.layer2, &dh2, &mut grads.layer2, true);
        if let Some(m) = &cache.mask1 {
            for (d, m) in d_l1_out.iter_mut().zip(m) {
                d.iter_mut().zip(m).for_each(|(d, m)| *d *= m);
            }
        }
        layer_backward(
            &p.layer1,
            &cache.layer1,
            &d_l1_out,
            &mut grads.layer1,
            false,
        );
    }

    /// Mean Huber loss over a batch and its gradient. `masks[k]` applies to
    /// sample `k`; `None` means infer mode.
    pub fn loss_and_grads(
        &self,
        inputs: &[&[f64]],
        targets: &[f64],
        masks: Option<&[DropoutMasks]>,
        delta: f64,
    ) -> Result<(f64, f64, Params)> {
        let mut grads = self.params.zeros_like();
        let (loss, abs_err) =
            self.accumulate_batch(inputs, targets, masks, delta, 0..inputs.len(), &mut grads)?;
        let n = inputs.len() as f64;
        grads.scale(1.0 / n);
        Ok((loss / n, abs_err / n, grads))
    }

    /// Sums loss, absolute error and unscaled gradients over `range`.
    pub(crate) fn accumulate_batch(
        &self,
        inputs: &[&[f64]],
        targets: &[f64],
        masks: Option<&[DropoutMasks]>,
        delta: f64,
        range: std::ops::Range<usize>,
        grads: &mut Params,
    ) -> Result<(f64, f64)> {
        let mut loss = 0.0;
        let mut abs_err = 0.0;
        for k in range {
            let mode = match masks {
                Some(m) => Mode::Train(&m[k]),
                None => Mode::Infer,
            };
            let cache = self.forward(inputs[k], mode)?;
            let e = cache.output - targets[k];
            loss += super::huber_loss(cache.output, targets[k], delta);
            abs_err += e.abs();
            self.backward(&cache, super::huber_grad(e, delta), grads);
        }
        Ok((loss, abs_err))
    }
}
