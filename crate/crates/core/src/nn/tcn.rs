//! Temporal convolutional head: stacked dilated 1-D convolutions over the
//! `K × d` snippet sequence, global average pooling, then a linear layer.
//!
//! Each layer computes `h' = relu(conv(h)) (+ h when channel counts match)`.
//! Convolutions are centred with zero padding, so the sequence length is
//! preserved; tap `k` of a layer with dilation `δ` reads offset `(k−1)·δ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ce_loss, check_label, init_tensor, Head, Init, LinearHead, NnError, Parameters, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const KERNEL_WIDTH: usize = 3;

/// Architecture tag written into evaluation reports.
pub const TCN_VERSION: &str = "tcn-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcnConfig {
    pub layers: usize,
    pub channels: usize,
}

impl Default for TcnConfig {
    fn default() -> Self {
        Self { layers: 3, channels: 64 }
    }
}

/// One dilated convolution. Weights are stored `[out][tap][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub ch_in: usize,
    pub ch_out: usize,
    pub dilation: usize,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn new<R: Rng + ?Sized>(ch_in: usize, ch_out: usize, dilation: usize, init: Init, rng: &mut R) -> Self {
        let fan_in = ch_in * KERNEL_WIDTH;
        Self {
            weight: init_tensor(ch_out * KERNEL_WIDTH * ch_in, fan_in, init, rng),
            bias: init_tensor(ch_out, fan_in, init, rng),
            ch_in,
            ch_out,
            dilation,
        }
    }

    fn zeros_like(&self) -> Self {
        Self { weight: vec![T::zero(); self.weight.len()], bias: vec![T::zero(); self.bias.len()], ..*self }
    }

    pub fn tap(&self, out: usize, tap: usize) -> &[T] {
        let start = (out * KERNEL_WIDTH + tap) * self.ch_in;
        &self.weight[start..start + self.ch_in]
    }

    fn residual(&self) -> bool {
        self.ch_in == self.ch_out
    }

    /// Source time index for output step `t` and tap `k`, if inside the sequence.
    fn source(&self, t: usize, k: usize, len: usize) -> Option<usize> {
        let shifted = (t + k * self.dilation).checked_sub(self.dilation)?;
        (shifted < len).then_some(shifted)
    }

    /// Pre-activation convolution output (`len × ch_out`).
    pub fn conv(&self, x: &Matrix<T>) -> Matrix<T> {
        let len = x.rows();
        let mut z = Matrix::zeros(len, self.ch_out);
        for t in 0..len {
            let out = z.row_mut(t);
            for (o, zo) in out.iter_mut().enumerate() {
                let mut acc = self.bias[o];
                for k in 0..KERNEL_WIDTH {
                    if let Some(s) = self.source(t, k, len) {
                        acc += self.tap(o, k).iter().zip(x.row(s)).map(|(&w, &xi)| w * xi).sum::<T>();
                    }
                }
                *zo = acc;
            }
        }
        z
    }

    /// Full layer: activation plus residual. Returns `(pre_activation, output)`.
    fn forward(&self, x: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
        let z = self.conv(x);
        let mut h = z.map(|v| v.max(T::zero()));
        if self.residual() {
            for (hv, &xv) in h.as_mut_slice().iter_mut().zip(x.as_slice()) {
                *hv += xv;
            }
        }
        (z, h)
    }

    /// Given `dh` for this layer's output, accumulates parameter gradients
    /// into `grad` and returns the gradient for the layer input.
    fn backward(&self, x: &Matrix<T>, z: &Matrix<T>, dh: &Matrix<T>, grad: &mut Self) -> Matrix<T> {
        let len = x.rows();
        let mut dx = if self.residual() { dh.clone() } else { Matrix::zeros(len, self.ch_in) };
        for t in 0..len {
            for o in 0..self.ch_out {
                if z[(t, o)] <= T::zero() {
                    continue;
                }
                let dz = dh[(t, o)];
                grad.bias[o] += dz;
                for k in 0..KERNEL_WIDTH {
                    let Some(s) = self.source(t, k, len) else { continue };
                    let start = (o * KERNEL_WIDTH + k) * self.ch_in;
                    let w = &self.weight[start..start + self.ch_in];
                    let gw = &mut grad.weight[start..start + self.ch_in];
                    for ((g, &xi), (&wi, d)) in gw.iter_mut().zip(x.row(s)).zip(w.iter().zip(dx.row_mut(s))) {
                        *g += dz * xi;
                        *d += dz * wi;
                    }
                }
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnHead<T> {
    pub layers: Vec<ConvLayer<T>>,
    pub output: LinearHead<T>,
}

impl<T: Scalar> TcnHead<T> {
    /// Dilations are `1, 2, 4, …`; the first layer maps `input_dim` to
    /// `cfg.channels`.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, num_classes: usize, cfg: &TcnConfig, init: Init, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(cfg.layers);
        let mut ch_in = input_dim;
        for l in 0..cfg.layers {
            layers.push(ConvLayer::new(ch_in, cfg.channels, 1 << l, init, rng));
            ch_in = cfg.channels;
        }
        Self { layers, output: LinearHead::new(ch_in, num_classes, init, rng) }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(self.output.input_dim(), |l| l.ch_in)
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(ConvLayer::zeros_like).collect(),
            output: LinearHead::zeros(self.output.input_dim(), self.output.num_classes()),
        }
    }

    fn check_input(&self, x: &Matrix<T>) -> Result<()> {
        if x.rows() == 0 {
            return Err(NnError::InvalidArgument("empty sequence".into()));
        }
        if x.cols() != self.input_dim() {
            return Err(NnError::DimMismatch { expected: self.input_dim(), found: x.cols() });
        }
        Ok(())
    }

    /// Layer inputs, pre-activations, and the pooled feature vector.
    fn trace(&self, x: &Matrix<T>) -> (Vec<Matrix<T>>, Vec<Matrix<T>>, Vec<T>) {
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(x.clone());
        for layer in &self.layers {
            let (z, h) = layer.forward(inputs.last().expect("input present"));
            pre.push(z);
            inputs.push(h);
        }
        let last = inputs.last().expect("input present");
        let mut pooled = last.col_sums();
        let inv = T::one() / T::of_usize(last.rows());
        pooled.iter_mut().for_each(|p| *p *= inv);
        (inputs, pre, pooled)
    }
}

impl<T: Scalar> Parameters<T> for TcnHead<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out.extend(self.output.tensors());
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out.extend(self.output.tensors_mut());
        out
    }

    fn decay_mask(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self.layers.iter().flat_map(|_| [true, false]).collect();
        out.extend(self.output.decay_mask());
        out
    }
}

impl<T: Scalar> Head<T> for TcnHead<T> {
    type Input = Matrix<T>;

    fn num_classes(&self) -> usize {
        self.output.num_classes()
    }

    fn forward(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        self.check_input(x)?;
        let (_, _, pooled) = self.trace(x);
        self.output.forward(&pooled)
    }

    fn backward(&self, x: &Matrix<T>, label: usize) -> Result<(T, Self)> {
        check_label(label, self.num_classes())?;
        self.check_input(x)?;
        let (inputs, pre, pooled) = self.trace(x);
        let logits = self.output.forward(&pooled)?;
        let (loss, dlogits) = ce_loss(&logits, label);

        let mut grad = self.zeros_like();
        let dpooled = self.output.backprop(&pooled, &dlogits, &mut grad.output);
        let len = x.rows();
        let inv = T::one() / T::of_usize(len);
        let width = dpooled.len();
        let mut dh = Matrix::from_fn(len, width, |_, c| dpooled[c] * inv);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            dh = layer.backward(&inputs[l], &pre[l], &dh, &mut grad.layers[l]);
        }
        Ok((loss, grad))
    }
}
