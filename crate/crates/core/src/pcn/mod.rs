//! Palette-conditioned colorization networks.
//!
//! The generator is a U-Net over the lightness channel with ten named conv
//! blocks. A chain of four 1x1 conv-relu stages embeds the palette; stages 1,
//! 2 and 4 are broadcast over the feature maps of `conv9`, `conv8` and `conv4`
//! and added. The discriminator is a DCGAN-style strided conv stack over the
//! Lab image concatenated with the spatially tiled palette.

mod colorize;

pub use colorize::{colorize_full, LabPlanes};
pub(crate) use colorize::palette_tensor;

pub use crate::nn::objective::{discriminator_loss as pcn_d_loss, pcn_generator_loss_grad};

use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::color::PALETTE_DIM;
use crate::nn::objective::{generator_adversarial_t, huber_t, LossWeights};
use crate::nn::{leaky_relu, sigmoid, BatchNorm2d, Conv2d, Linear, ParamStore};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcnConfig {
    /// Square training resolution; a multiple of 8.
    pub resolution: usize,
    /// Encoder widths at full, 1/2, 1/4 and 1/8 resolution; the decoder mirrors them.
    pub widths: [usize; 4],
    /// Discriminator conv widths; each conv halves the resolution.
    pub discriminator_widths: Vec<usize>,
}

impl Default for PcnConfig {
    fn default() -> Self {
        Self {
            resolution: 64,
            widths: [64, 128, 256, 512],
            discriminator_widths: vec![64, 128, 256],
        }
    }
}

impl PcnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 || self.resolution % 8 != 0 {
            return Err(Error::InvalidInput(format!(
                "resolution {} is not a positive multiple of 8",
                self.resolution
            )));
        }
        if self.widths.contains(&0) || self.discriminator_widths.contains(&0) {
            return Err(Error::InvalidInput("layer widths must be positive".into()));
        }
        let down = 1usize << self.discriminator_widths.len();
        if self.discriminator_widths.is_empty() || self.resolution % down != 0 {
            return Err(Error::InvalidInput(format!(
                "{} discriminator layers do not fit resolution {}",
                self.discriminator_widths.len(),
                self.resolution
            )));
        }
        Ok(())
    }
}

/// Palette embeddings for the three injection points, each `(batch, width)`.
#[derive(Debug, Clone)]
pub struct ConditionFeatures {
    pub conv9: Tensor,
    pub conv8: Tensor,
    pub conv4: Tensor,
}

#[derive(Debug, Clone)]
pub struct PcnModel {
    pub config: PcnConfig,
    generator: ParamStore,
    discriminator: ParamStore,
    blocks: Vec<Conv2d>,
    output: Conv2d,
    condition: Vec<Linear>,
    disc_convs: Vec<Conv2d>,
    disc_norms: Vec<Option<BatchNorm2d>>,
    disc_fc: Linear,
}

/// Generator/discriminator losses for one batch.
#[derive(Debug, Clone)]
pub struct PcnGeneratorLoss {
    pub total: Tensor,
    pub adversarial: Tensor,
    pub huber: Tensor,
}

impl PcnModel {
    pub fn new(config: PcnConfig, dtype: DType) -> Result<Self> {
        config.validate()?;
        let [c1, c2, c3, c4] = config.widths;
        let mut g = ParamStore::new(dtype);
        // (name, in, out, stride)
        let spec = [
            ("conv1", 1, c1, 1),
            ("conv2", c1, c2, 2),
            ("conv3", c2, c3, 2),
            ("conv4", c3, c4, 2),
            ("conv5", c4, c4, 1),
            ("conv6", c4, c4, 1),
            ("conv7", c4, c4, 1),
            ("conv8", c4 + c3, c3, 1),
            ("conv9", c3 + c2, c2, 1),
            ("conv10", c2 + c1, c1, 1),
        ];
        let blocks = spec
            .iter()
            .map(|&(name, i, o, s)| Conv2d::new(&mut g, name, i, o, 3, s, 1))
            .collect::<Result<Vec<_>>>()?;
        let output = Conv2d::new(&mut g, "output", c1, 2, 1, 1, 0)?;
        let stage_widths = [c2, c3, c4, c4];
        let mut condition = Vec::new();
        let mut width = PALETTE_DIM;
        for (i, &w) in stage_widths.iter().enumerate() {
            condition.push(Linear::new(&mut g, &format!("palette{}", i + 1), width, w, true)?);
            width = w;
        }

        let mut d = ParamStore::new(dtype);
        let mut disc_convs = Vec::new();
        let mut disc_norms = Vec::new();
        let mut width = 3 + PALETTE_DIM;
        for (i, &w) in config.discriminator_widths.iter().enumerate() {
            disc_convs.push(Conv2d::new(&mut d, &format!("conv{}", i + 1), width, w, 4, 2, 1)?);
            disc_norms.push(if i == 0 {
                None
            } else {
                Some(BatchNorm2d::new(&mut d, &format!("norm{}", i + 1), w)?)
            });
            width = w;
        }
        let side = config.resolution >> config.discriminator_widths.len();
        let disc_fc = Linear::new(&mut d, "fc", width * side * side, 1, true)?;

        Ok(Self {
            config,
            generator: g,
            discriminator: d,
            blocks,
            output,
            condition,
            disc_convs,
            disc_norms,
            disc_fc,
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

    /// 1x1 conv-relu chain over the `(batch, 15)` normalized palette. On a
    /// 1x1 map a 1x1 conv is an affine map of the channel vector.
    pub fn condition_features(&self, palette: &Tensor) -> Result<ConditionFeatures> {
        let (_, width) = palette.dims2()?;
        if width != PALETTE_DIM {
            return Err(Error::Shape(format!("palette width {width}, expected {PALETTE_DIM}")));
        }
        let mut h = palette.clone();
        let mut stages = Vec::with_capacity(4);
        for layer in &self.condition {
            h = layer.forward(&h)?.relu()?;
            stages.push(h.clone());
        }
        Ok(ConditionFeatures {
            conv9: stages[0].clone(),
            conv8: stages[1].clone(),
            conv4: stages[3].clone(),
        })
    }

    fn block(&self, i: usize, x: &Tensor) -> Result<Tensor> {
        Ok(self.blocks[i].forward(x)?.relu()?)
    }

    /// Predicts `(batch, 2, H, W)` ab in [-1, 1] from `(batch, 1, H, W)`
    /// lightness in [-1, 1] and a `(batch, 15)` normalized palette.
    pub fn unet_colorize(&self, lightness: &Tensor, palette: &Tensor) -> Result<Tensor> {
        let (batch, channels, h, w) = lightness.dims4()?;
        if channels != 1 || h % 8 != 0 || w % 8 != 0 || h == 0 || w == 0 {
            return Err(Error::Shape(format!(
                "lightness must be (N, 1, H, W) with H, W multiples of 8; got {:?}",
                lightness.dims()
            )));
        }
        if palette.dim(0)? != batch {
            return Err(Error::Shape(format!(
                "{} palettes for {batch} images",
                palette.dim(0)?
            )));
        }
        let cond = self.condition_features(palette)?;
        let inject = |x: Tensor, f: &Tensor| -> Result<Tensor> {
            let c = f.dim(1)?;
            Ok(x.broadcast_add(&f.reshape((batch, c, 1, 1))?)?)
        };

        let e1 = self.block(0, lightness)?;
        let e2 = self.block(1, &e1)?;
        let e3 = self.block(2, &e2)?;
        let e4 = inject(self.block(3, &e3)?, &cond.conv4)?;
        let m5 = self.block(4, &e4)?;
        let m6 = self.block(5, &m5)?;
        let m7 = self.block(6, &m6)?;

        let up = |x: &Tensor, skip: &Tensor| -> Result<Tensor> {
            let (_, _, sh, sw) = skip.dims4()?;
            Ok(Tensor::cat(&[&x.upsample_nearest2d(sh, sw)?, skip], 1)?)
        };
        let d8 = inject(self.block(7, &up(&m7, &e3)?)?, &cond.conv8)?;
        let d9 = inject(self.block(8, &up(&d8, &e2)?)?, &cond.conv9)?;
        let d10 = self.block(9, &up(&d9, &e1)?)?;
        Ok(self.output.forward(&d10)?.tanh()?)
    }

    /// `D1(p, image)` in (0, 1) for `(batch, 3, H, W)` normalized Lab images
    /// at the configured resolution.
    pub fn discriminate_image(&self, palette: &Tensor, image: &Tensor) -> Result<Tensor> {
        let (batch, channels, h, w) = image.dims4()?;
        let r = self.config.resolution;
        if channels != 3 || h != r || w != r {
            return Err(Error::Shape(format!(
                "discriminator expects (N, 3, {r}, {r}), got {:?}",
                image.dims()
            )));
        }
        let tiled = palette
            .reshape((batch, PALETTE_DIM, 1, 1))?
            .broadcast_as((batch, PALETTE_DIM, h, w))?;
        let mut x = Tensor::cat(&[image, &tiled], 1)?;
        for (conv, norm) in self.disc_convs.iter().zip(&self.disc_norms) {
            x = conv.forward(&x)?;
            if let Some(norm) = norm {
                x = norm.forward(&x)?;
            }
            x = leaky_relu(&x, 0.2)?;
        }
        Ok(sigmoid(&self.disc_fc.forward(&x.flatten_from(1)?)?)?.squeeze(1)?)
    }

    /// Generator objective given the discriminator's scores on the
    /// generated images.
    pub fn generator_loss(
        &self,
        d_fake: &Tensor,
        pred_ab: &Tensor,
        target_ab: &Tensor,
        weights: LossWeights,
    ) -> Result<PcnGeneratorLoss> {
        let adversarial = generator_adversarial_t(d_fake)?;
        let huber = huber_t(pred_ab, target_ab, weights.delta)?;
        let total = (&adversarial + (&huber * weights.huber)?)?;
        Ok(PcnGeneratorLoss {
            total,
            adversarial,
            huber,
        })
    }
}
