use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use candle_nn::Optimizer;
use image::RgbImage;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{guard, scalar, write_history, Accumulator, History, TrainConfig};
use crate::checkpoint;
use crate::color::{extract_dominant_palette, Palette};
use crate::nn::objective::discriminator_loss_t;
use crate::pcn::{palette_tensor, LabPlanes, PcnConfig, PcnModel};
use crate::{Error, Result};

/// Dominant palettes keyed by image index, extracted on first use.
#[derive(Debug, Default)]
pub struct PaletteCache {
    palettes: HashMap<usize, Palette>,
    extractions: usize,
}

impl PaletteCache {
    pub fn get(&mut self, index: usize, image: &RgbImage) -> Result<&Palette> {
        if !self.palettes.contains_key(&index) {
            self.extractions += 1;
            self.palettes.insert(index, extract_dominant_palette(image)?);
        }
        Ok(&self.palettes[&index])
    }

    /// Number of extractions performed (cache misses).
    pub fn extractions(&self) -> usize {
        self.extractions
    }
}

/// A training image: the original plus its Lab planes at the model resolution.
#[derive(Debug, Clone)]
pub struct PcnSample {
    pub image: RgbImage,
    pub planes: LabPlanes,
}

impl PcnSample {
    pub fn new(image: RgbImage, resolution: usize) -> Self {
        let planes = LabPlanes::from_rgb_resized(&image, resolution as u32);
        Self { image, planes }
    }
}

/// Reads every PNG/JPEG directly under `dir`, in file-name order. Unreadable
/// files are skipped with a warning; at least one image must load.
pub fn load_image_dir(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, RgbImage)>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::file(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    paths.sort();
    let mut images = Vec::new();
    for path in paths {
        match image::open(&path) {
            Ok(img) => images.push((path, img.to_rgb8())),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if images.is_empty() {
        return Err(Error::InvalidInput(format!("no readable images in {}", dir.display())));
    }
    Ok(images)
}

/// Trains a fresh colorization model on the images of `dir`.
pub fn train_pcn(dir: impl AsRef<Path>, model_config: PcnConfig, config: &TrainConfig) -> Result<(PcnModel, History)> {
    config.validate()?;
    let images = load_image_dir(dir)?;
    let model = PcnModel::new(model_config, DType::F32)?;
    model.init_weights(config.init_std, config.seed)?;
    let samples: Vec<PcnSample> = images
        .into_iter()
        .map(|(_, img)| PcnSample::new(img, model.config.resolution))
        .collect();
    let history = fit_pcn(&model, &samples, config, &mut PaletteCache::default())?;
    Ok((model, history))
}

fn stack(planes: &[&LabPlanes], ab: bool, dtype: DType) -> Result<Tensor> {
    let parts = planes
        .iter()
        .map(|p| if ab { p.ab_tensor(dtype) } else { p.lightness_tensor(dtype) })
        .collect::<Result<Vec<_>>>()?;
    Ok(Tensor::cat(&parts, 0)?)
}

/// Alternating D1/G1 updates. Ground-truth palettes come from `cache`.
pub fn fit_pcn(model: &PcnModel, samples: &[PcnSample], config: &TrainConfig, cache: &mut PaletteCache) -> Result<History> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("no training images".into()));
    }
    let r = model.config.resolution as u32;
    if let Some(s) = samples.iter().find(|s| s.planes.width != r || s.planes.height != r) {
        return Err(Error::Shape(format!(
            "training planes are {}x{}, model resolution is {r}",
            s.planes.width, s.planes.height
        )));
    }
    let dtype = model.dtype();
    let weights = config.weights();
    let mut opt_g = config.optimizer(model.generator_params())?;
    let mut opt_d = config.optimizer(model.discriminator_params())?;

    let mut history = History::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64)));
        let mut acc = Accumulator::default();
        for chunk in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| history.steps >= m) {
                break;
            }
            let step = history.steps + 1;
            let mut palettes = Vec::with_capacity(chunk.len());
            for &i in chunk {
                palettes.push(cache.get(i, &samples[i].image)?.clone());
            }
            let palette = palette_tensor(&palettes.iter().collect::<Vec<_>>(), dtype)?;
            let planes: Vec<&LabPlanes> = chunk.iter().map(|&i| &samples[i].planes).collect();
            let l = stack(&planes, false, dtype)?;
            let ab = stack(&planes, true, dtype)?;

            let pred = model.unet_colorize(&l, &palette)?;
            let real = Tensor::cat(&[&l, &ab], 1)?;
            let fake = Tensor::cat(&[&l, &pred.detach()], 1)?;
            let d_loss = discriminator_loss_t(
                &model.discriminate_image(&palette, &real)?,
                &model.discriminate_image(&palette, &fake)?,
            )?;
            acc.d += guard(step, "discriminator loss", scalar(&d_loss)?)?;
            opt_d.backward_step(&d_loss)?;

            let d_fake = model.discriminate_image(&palette, &Tensor::cat(&[&l, &pred], 1)?)?;
            let g = model.generator_loss(&d_fake, &pred, &ab, weights)?;
            acc.g += guard(step, "generator loss", scalar(&g.total)?)?;
            acc.huber += scalar(&g.huber)?;
            opt_g.backward_step(&g.total)?;

            acc.batches += 1;
            history.steps = step;
        }
        if acc.batches == 0 {
            break;
        }
        let losses = acc.finish(epoch);
        log::info!(
            "pcn epoch {epoch}: d {:.4} g {:.4} huber {:.5}",
            losses.d_loss,
            losses.g_loss,
            losses.huber
        );
        history.epochs.push(losses);
        if let (Some(every), Some(dir)) = (config.checkpoint_every, &config.out_dir) {
            if epoch % every == 0 {
                checkpoint::save(dir.join(format!("pcn-epoch{epoch}.safetensors")), None, Some(model))?;
            }
        }
    }
    if let Some(dir) = &config.out_dir {
        checkpoint::save(dir.join("pcn.safetensors"), None, Some(model))?;
    }
    write_history(config, &history)?;
    Ok(history)
}
