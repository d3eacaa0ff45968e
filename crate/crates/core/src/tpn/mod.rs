//! Text-to-palette networks.
//!
//! A GRU encodes the word vectors, a fully-connected layer maps each hidden
//! state to a diagonal Gaussian (conditioning augmentation), and a GRU decoder
//! with additive sigmoid attention over the sampled conditions emits one Lab
//! color per step. The discriminator is an MLP over the mean condition and a
//! palette.

mod sample;

pub use sample::{sample_palettes, SampleOptions, SampledPalette, Samples};

pub use crate::nn::objective::{
    discriminator_loss as tpn_d_loss, huber, kl_gaussian, tpn_generator_loss_grad, LossWeights,
};

use candle_core::{DType, Device, Tensor, Var, D};
use serde::{Deserialize, Serialize};

use crate::color::{PALETTE_DIM, PALETTE_SIZE};
use crate::data::{pad_ids, EmbeddedText, EmbeddingMatrix, Vocabulary, EMBEDDING_DIM};
use crate::nn::objective::{generator_adversarial_t, huber_t, kl_gaussian_t};
use crate::nn::{leaky_relu, sigmoid, GruCell, Linear, ParamKind, ParamStore};
use crate::{Error, Result};

/// Layer sizes of the text-to-palette model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpnConfig {
    pub encoder_hidden: usize,
    pub condition_dim: usize,
    pub decoder_hidden: usize,
    pub attention_dim: usize,
    /// Hidden widths of the discriminator MLP; empty means a single affine
    /// layer followed by the sigmoid.
    pub discriminator_hidden: Vec<usize>,
}

impl Default for TpnConfig {
    fn default() -> Self {
        Self {
            encoder_hidden: 150,
            condition_dim: 150,
            decoder_hidden: 150,
            attention_dim: 150,
            discriminator_hidden: vec![256, 128],
        }
    }
}

/// Encoder hidden states, `(batch, T, encoder_hidden)`.
#[derive(Debug, Clone)]
pub struct EncoderState {
    pub hidden: Tensor,
}

/// Per-token Gaussian parameters, each `(batch, T, condition_dim)`.
/// `sigma = exp(logvar / 2)`.
#[derive(Debug, Clone)]
pub struct CaParams {
    pub mu: Tensor,
    pub logvar: Tensor,
}

impl CaParams {
    pub fn sigma(&self) -> Result<Tensor> {
        Ok((&self.logvar * 0.5)?.exp()?)
    }
}

/// Sampled conditions `ĉ` `(batch, T, condition_dim)`, their masked mean
/// `c̄` `(batch, condition_dim)`, and the `(batch, T)` 0/1 mask.
#[derive(Debug, Clone)]
pub struct ConditioningSequence {
    pub c_hat: Tensor,
    pub c_bar: Tensor,
    pub mask: Tensor,
}

/// Decoder recurrence state before emitting color `step + 1`.
#[derive(Debug, Clone)]
pub struct DecoderState {
    pub s: Tensor,
    pub last_color: Tensor,
    pub step: usize,
}

/// Generator output for a batch.
#[derive(Debug, Clone)]
pub struct GeneratorOutput {
    /// `(batch, 15)` normalized Lab, color-major.
    pub palette: Tensor,
    /// `(batch, 5, T)` attention weights.
    pub attention: Tensor,
    pub ca: CaParams,
    pub cond: ConditioningSequence,
}

/// Scalar pieces of one generator objective evaluation.
#[derive(Debug, Clone)]
pub struct GeneratorLoss {
    pub total: Tensor,
    pub adversarial: Tensor,
    pub huber: Tensor,
    pub kl: Tensor,
}

#[derive(Debug, Clone)]
pub struct TpnModel {
    pub config: TpnConfig,
    pub vocab: Vocabulary,
    generator: ParamStore,
    discriminator: ParamStore,
    embedding: Var,
    encoder: GruCell,
    ca: Linear,
    attn_state: Linear,
    attn_cond: Linear,
    attn_score: Linear,
    decoder: GruCell,
    head: Linear,
    disc_hidden: Vec<Linear>,
    disc_out: Linear,
}

impl TpnModel {
    /// Builds the model with zeroed weights and the given word vectors. Call
    /// [`TpnModel::init_weights`] before training.
    pub fn new(config: TpnConfig, vocab: Vocabulary, embeddings: &EmbeddingMatrix, dtype: DType) -> Result<Self> {
        if embeddings.rows() != vocab.len() {
            return Err(Error::Shape(format!(
                "{} embedding rows for a vocabulary of {}",
                embeddings.rows(),
                vocab.len()
            )));
        }
        let mut g = ParamStore::new(dtype);
        let embedding = g.add("embedding", &[vocab.len(), EMBEDDING_DIM], ParamKind::Embedding)?;
        let table = Tensor::from_slice(embeddings.as_slice(), (vocab.len(), EMBEDDING_DIM), &Device::Cpu)?;
        embedding.set(&table.to_dtype(dtype)?)?;

        let c = &config;
        let encoder = GruCell::new(&mut g, "encoder", EMBEDDING_DIM, c.encoder_hidden)?;
        let ca = Linear::new(&mut g, "ca", c.encoder_hidden, 2 * c.condition_dim, true)?;
        let attn_state = Linear::new(&mut g, "attention.state", c.decoder_hidden, c.attention_dim, true)?;
        let attn_cond = Linear::new(&mut g, "attention.condition", c.condition_dim, c.attention_dim, false)?;
        let attn_score = Linear::new(&mut g, "attention.score", c.attention_dim, 1, false)?;
        let decoder = GruCell::new(&mut g, "decoder", 3 + c.condition_dim, c.decoder_hidden)?;
        let head = Linear::new(&mut g, "head", c.decoder_hidden, 3, true)?;

        let mut d = ParamStore::new(dtype);
        let mut width = c.condition_dim + PALETTE_DIM;
        let mut disc_hidden = Vec::new();
        for (i, &h) in c.discriminator_hidden.iter().enumerate() {
            disc_hidden.push(Linear::new(&mut d, &format!("fc{i}"), width, h, true)?);
            width = h;
        }
        let disc_out = Linear::new(&mut d, "out", width, 1, true)?;

        Ok(Self {
            config,
            vocab,
            generator: g,
            discriminator: d,
            embedding,
            encoder,
            ca,
            attn_state,
            attn_cond,
            attn_score,
            decoder,
            head,
            disc_hidden,
            disc_out,
        })
    }

    pub fn init_weights(&self, std: f64, seed: u64) -> Result<()> {
        self.generator.init_weights(std, seed)?;
        self.discriminator.init_weights(std, seed.wrapping_add(1))
    }

    pub fn generator_params(&self) -> &ParamStore {
        &self.generator
    }

    pub fn discriminator_params(&self) -> &ParamStore {
        &self.discriminator
    }

    pub fn dtype(&self) -> DType {
        self.generator.dtype()
    }

    fn device(&self) -> &Device {
        self.generator.device()
    }

    /// Looks up the (trainable) word vectors for `text.ids`, returning
    /// `(batch, T, 300)` inputs and the `(batch, T)` mask.
    pub fn embed(&self, text: &EmbeddedText) -> Result<(Tensor, Tensor)> {
        let ids = Tensor::from_slice(&text.ids, text.ids.len(), self.device())?;
        let x = self
            .embedding
            .as_tensor()
            .index_select(&ids, 0)?
            .reshape((text.batch, text.len, EMBEDDING_DIM))?;
        Ok((x, self.mask_tensor(text)?))
    }

    /// Pads id rows (see [`pad_ids`]) and embeds them.
    pub fn embed_ids(&self, rows: &[Vec<u32>]) -> Result<(Tensor, Tensor)> {
        let (batch, len, ids, mask) = pad_ids(rows);
        self.embed(&EmbeddedText {
            batch,
            len,
            ids,
            mask,
            vectors: Vec::new(),
        })
    }

    /// Uses the vectors carried by `text` instead of the model's table.
    pub fn inputs_from_vectors(&self, text: &EmbeddedText) -> Result<(Tensor, Tensor)> {
        let x = Tensor::from_slice(&text.vectors, (text.batch, text.len, EMBEDDING_DIM), self.device())?
            .to_dtype(self.dtype())?;
        Ok((x, self.mask_tensor(text)?))
    }

    fn mask_tensor(&self, text: &EmbeddedText) -> Result<Tensor> {
        let m: Vec<f32> = text.mask.iter().map(|&b| b as u8 as f32).collect();
        Ok(Tensor::from_vec(m, (text.batch, text.len), self.device())?.to_dtype(self.dtype())?)
    }

    /// Runs the encoder GRU over `(batch, T, 300)` inputs. Past a row's last
    /// valid token the previous hidden state is carried forward.
    pub fn encode_text(&self, x: &Tensor, mask: &Tensor) -> Result<EncoderState> {
        let (batch, len, width) = x.dims3()?;
        if width != EMBEDDING_DIM {
            return Err(Error::Shape(format!("embedding width {width}, expected {EMBEDDING_DIM}")));
        }
        let mut h = Tensor::zeros((batch, self.config.encoder_hidden), self.dtype(), self.device())?;
        let mut states = Vec::with_capacity(len);
        for t in 0..len {
            let xt = x.narrow(1, t, 1)?.squeeze(1)?;
            let next = self.encoder.step(&xt, &h)?;
            let m = mask.narrow(1, t, 1)?;
            // h = m * next + (1 - m) * h
            h = (&h + next.sub(&h)?.broadcast_mul(&m)?)?;
            states.push(h.clone());
        }
        Ok(EncoderState {
            hidden: Tensor::stack(&states, 1)?,
        })
    }

    /// `ĉ = μ + σ ⊙ ε` per token; `eps` has shape `(batch, T, condition_dim)`.
    pub fn condition_augment(
        &self,
        h: &EncoderState,
        eps: &Tensor,
        mask: &Tensor,
    ) -> Result<(ConditioningSequence, CaParams)> {
        let stats = self.ca.forward(&h.hidden)?;
        let dc = self.config.condition_dim;
        let mu = stats.narrow(D::Minus1, 0, dc)?;
        let logvar = stats.narrow(D::Minus1, dc, dc)?;
        let ca = CaParams { mu, logvar };
        let c_hat = (&ca.mu + ca.sigma()?.mul(eps)?)?;
        let weights = mask.unsqueeze(2)?;
        let c_bar = c_hat
            .broadcast_mul(&weights)?
            .sum(1)?
            .broadcast_div(&mask.sum_keepdim(1)?)?;
        Ok((
            ConditioningSequence {
                c_hat,
                c_bar,
                mask: mask.clone(),
            },
            ca,
        ))
    }

    /// Additive attention `e_j = wᵀ σ(W_s s + W_ĉ ĉ_j)`, softmax over valid
    /// tokens. Returns the context `(batch, condition_dim)` and weights `(batch, T)`.
    pub fn attention(&self, state: &DecoderState, cond: &ConditioningSequence) -> Result<(Tensor, Tensor)> {
        let projected = self.attn_cond.forward(&cond.c_hat)?;
        self.attend(&state.s, &projected, cond)
    }

    fn attend(&self, s: &Tensor, projected: &Tensor, cond: &ConditioningSequence) -> Result<(Tensor, Tensor)> {
        let query = self.attn_state.forward(s)?.unsqueeze(1)?;
        let scores = self
            .attn_score
            .forward(&sigmoid(&projected.broadcast_add(&query)?)?)?
            .squeeze(D::Minus1)?;
        let alpha = masked_softmax(&scores, &cond.mask)?;
        let context = alpha.unsqueeze(1)?.matmul(&cond.c_hat)?.squeeze(1)?;
        Ok((context, alpha))
    }

    /// Five decoder steps from a zero state and a zero previous color.
    pub fn decode_palette(&self, cond: &ConditioningSequence) -> Result<(Tensor, Tensor)> {
        let batch = cond.c_hat.dim(0)?;
        let projected = self.attn_cond.forward(&cond.c_hat)?;
        let mut state = DecoderState {
            s: Tensor::zeros((batch, self.config.decoder_hidden), self.dtype(), self.device())?,
            last_color: Tensor::zeros((batch, 3), self.dtype(), self.device())?,
            step: 0,
        };
        let mut colors = Vec::with_capacity(PALETTE_SIZE);
        let mut weights = Vec::with_capacity(PALETTE_SIZE);
        while state.step < PALETTE_SIZE {
            let (context, alpha) = self.attend(&state.s, &projected, cond)?;
            let input = Tensor::cat(&[&state.last_color, &context], 1)?;
            let s = self.decoder.step(&input, &state.s)?;
            let color = self.head.forward(&s)?.tanh()?;
            colors.push(color.clone());
            weights.push(alpha);
            state = DecoderState {
                s,
                last_color: color,
                step: state.step + 1,
            };
        }
        Ok((Tensor::cat(&colors, 1)?, Tensor::stack(&weights, 1)?))
    }

    /// Full generator pass from word vectors and noise.
    pub fn generate(&self, x: &Tensor, mask: &Tensor, eps: &Tensor) -> Result<GeneratorOutput> {
        let h = self.encode_text(x, mask)?;
        let (cond, ca) = self.condition_augment(&h, eps, mask)?;
        let (palette, attention) = self.decode_palette(&cond)?;
        Ok(GeneratorOutput {
            palette,
            attention,
            ca,
            cond,
        })
    }

    /// `D0(c̄, palette)` in (0, 1); `palette` is `(batch, 15)` normalized Lab.
    pub fn discriminate_palette(&self, c_bar: &Tensor, palette: &Tensor) -> Result<Tensor> {
        let mut h = Tensor::cat(&[c_bar, palette], 1)?;
        for layer in &self.disc_hidden {
            h = leaky_relu(&layer.forward(&h)?, 0.2)?;
        }
        Ok(sigmoid(&self.disc_out.forward(&h)?)?.squeeze(1)?)
    }

    /// Generator objective for a batch whose discriminator scores on the
    /// generated palettes are `d_fake`.
    pub fn generator_loss(
        &self,
        d_fake: &Tensor,
        out: &GeneratorOutput,
        target: &Tensor,
        weights: LossWeights,
    ) -> Result<GeneratorLoss> {
        let adversarial = generator_adversarial_t(d_fake)?;
        let huber = huber_t(&out.palette, target, weights.delta)?;
        let kl = kl_gaussian_t(&out.ca.mu, &out.ca.logvar, &out.cond.mask)?;
        let total = ((&adversarial + (&huber * weights.huber)?)? + (&kl * weights.kl)?)?;
        Ok(GeneratorLoss {
            total,
            adversarial,
            huber,
            kl,
        })
    }

    /// Standard-normal noise for a `(batch, T)` text.
    pub fn noise(&self, batch: usize, len: usize, rng: &mut impl rand::Rng) -> Result<Tensor> {
        let n = batch * len * self.config.condition_dim;
        let data: Vec<f64> = (0..n).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)).collect();
        Ok(Tensor::from_vec(data, (batch, len, self.config.condition_dim), self.device())?.to_dtype(self.dtype())?)
    }

    pub fn zero_noise(&self, batch: usize, len: usize) -> Result<Tensor> {
        Ok(Tensor::zeros((batch, len, self.config.condition_dim), self.dtype(), self.device())?)
    }
}

/// Softmax over the last axis with masked-out positions forced to weight 0.
pub fn masked_softmax(scores: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let keep = mask.ne(0.0)?;
    let neg_inf = Tensor::full(f64::NEG_INFINITY, scores.shape(), scores.device())?.to_dtype(scores.dtype())?;
    let masked = keep.where_cond(scores, &neg_inf)?;
    Ok(candle_nn::ops::softmax(&masked, D::Minus1)?)
}
