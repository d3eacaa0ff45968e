use candle_core::{Tensor, Var, D};

use super::im2col::im2col;
use super::{ParamKind, ParamStore};
use crate::Result;

/// Fully-connected layer, `y = x W^T + b`, applied over the last axis.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Var,
    pub bias: Option<Var>,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, bias: bool) -> Result<Self> {
        let weight = store.add(format!("{name}.weight"), &[output, input], ParamKind::Weight)?;
        let bias = if bias {
            Some(store.add(format!("{name}.bias"), &[output], ParamKind::Bias)?)
        } else {
            None
        };
        Ok(Self { weight, bias })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.broadcast_matmul(&self.weight.t()?)?;
        Ok(match &self.bias {
            Some(b) => y.broadcast_add(b)?,
            None => y,
        })
    }
}

/// GRU cell with the usual reset/update gate layout:
///
/// ```text
/// r = σ(W_ir x + b_ir + W_hr h + b_hr)
/// z = σ(W_iz x + b_iz + W_hz h + b_hz)
/// n = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
#[derive(Debug, Clone)]
pub struct GruCell {
    pub input: Linear,
    pub hidden: Linear,
    pub hidden_size: usize,
}

impl GruCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden_size: usize) -> Result<Self> {
        Ok(Self {
            input: Linear::new(store, &format!("{name}.input"), input, 3 * hidden_size, true)?,
            hidden: Linear::new(store, &format!("{name}.hidden"), hidden_size, 3 * hidden_size, true)?,
            hidden_size,
        })
    }

    /// `x`: (batch, input), `h`: (batch, hidden) -> (batch, hidden).
    pub fn step(&self, x: &Tensor, h: &Tensor) -> Result<Tensor> {
        let gi = self.input.forward(x)?.chunk(3, D::Minus1)?;
        let gh = self.hidden.forward(h)?.chunk(3, D::Minus1)?;
        let r = sigmoid(&(&gi[0] + &gh[0])?)?;
        let z = sigmoid(&(&gi[1] + &gh[1])?)?;
        let n = (&gi[2] + (r * &gh[2])?)?.tanh()?;
        // (1 - z) n + z h == n + z (h - n)
        Ok((&n + (z * (h - &n)?)?)?)
    }
}

/// 2-D convolution over NCHW input with square kernels.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Var,
    pub bias: Var,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        Ok(Self {
            weight: store.add(format!("{name}.weight"), &[output, input, kernel, kernel], ParamKind::Weight)?,
            bias: store.add(format!("{name}.bias"), &[output], ParamKind::Bias)?,
            stride,
            padding,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.dims()[2]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (batch, _, h, w) = x.dims4()?;
        let (c_out, k) = (self.out_channels(), self.kernel());
        let patches = if k == 1 && self.stride == 1 && self.padding == 0 {
            x.flatten_from(2)?
        } else {
            im2col(x, k, self.stride, self.padding)?
        };
        let oh = (h + 2 * self.padding - k) / self.stride + 1;
        let ow = (w + 2 * self.padding - k) / self.stride + 1;
        let weight = self.weight.flatten_from(1)?;
        let y = weight.broadcast_matmul(&patches)?.reshape((batch, c_out, oh, ow))?;
        Ok(y.broadcast_add(&self.bias.reshape((1, c_out, 1, 1))?)?)
    }
}

/// Batch normalization over (N, H, W) using the statistics of the batch at hand.
#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub gain: Var,
    pub shift: Var,
    pub eps: f64,
}

impl BatchNorm2d {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gain: store.add(format!("{name}.gain"), &[channels], ParamKind::Scale)?,
            shift: store.add(format!("{name}.shift"), &[channels], ParamKind::Bias)?,
            eps: 1e-5,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let c = x.dim(1)?;
        let mean = x.mean_keepdim(0)?.mean_keepdim(2)?.mean_keepdim(3)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(0)?.mean_keepdim(2)?.mean_keepdim(3)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed
            .broadcast_mul(&self.gain.reshape((1, c, 1, 1))?)?
            .broadcast_add(&self.shift.reshape((1, c, 1, 1))?)?)
    }
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::sigmoid(x)?)
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(x.maximum(&(x * slope)?)?)
}
