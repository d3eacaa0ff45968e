use candle_core::{DType, Device, Tensor};
use image::imageops::{self, FilterType};
use image::{ImageBuffer, Rgb, RgbImage};

use super::PcnModel;
use crate::color::{lab_to_rgb, rgb_to_lab, LabColor, Palette, AB_SCALE, PALETTE_DIM};
use crate::{Error, Result};

/// Normalized Lab planes of an image: `l` is `h x w` in [-1, 1], `ab` is
/// `2 x h x w` (all a, then all b) in roughly [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LabPlanes {
    pub width: u32,
    pub height: u32,
    pub l: Vec<f32>,
    pub ab: Vec<f32>,
}

impl LabPlanes {
    pub fn from_rgb(image: &RgbImage) -> Self {
        let n = (image.width() * image.height()) as usize;
        let mut l = Vec::with_capacity(n);
        let mut ab = vec![0.0; 2 * n];
        for (i, px) in image.pixels().enumerate() {
            let [nl, na, nb] = rgb_to_lab(px.0).normalized();
            l.push(nl as f32);
            ab[i] = na as f32;
            ab[n + i] = nb as f32;
        }
        Self {
            width: image.width(),
            height: image.height(),
            l,
            ab,
        }
    }

    /// Resizes to `size x size` first (triangle filter).
    pub fn from_rgb_resized(image: &RgbImage, size: u32) -> Self {
        if image.width() == size && image.height() == size {
            return Self::from_rgb(image);
        }
        Self::from_rgb(&imageops::resize(image, size, size, FilterType::Triangle))
    }

    pub fn lightness_tensor(&self, dtype: DType) -> Result<Tensor> {
        let (h, w) = (self.height as usize, self.width as usize);
        Ok(Tensor::from_slice(&self.l, (1, 1, h, w), &Device::Cpu)?.to_dtype(dtype)?)
    }

    pub fn ab_tensor(&self, dtype: DType) -> Result<Tensor> {
        let (h, w) = (self.height as usize, self.width as usize);
        Ok(Tensor::from_slice(&self.ab, (1, 2, h, w), &Device::Cpu)?.to_dtype(dtype)?)
    }
}

pub(crate) fn palette_tensor(palettes: &[&Palette], dtype: DType) -> Result<Tensor> {
    let flat: Vec<f32> = palettes.iter().flat_map(|p| p.to_normalized()).collect();
    Ok(Tensor::from_vec(flat, (palettes.len(), PALETTE_DIM), &Device::Cpu)?.to_dtype(dtype)?)
}

/// Colorizes `image` (its color, if any, is discarded) with `palette`. The
/// model sees the lightness at its training resolution; the predicted ab
/// planes are upsampled back and recombined with the full-resolution
/// lightness, so the output has the input's size and lightness.
pub fn colorize_full(model: &PcnModel, image: &RgbImage, palette: &Palette) -> Result<RgbImage> {
    let (width, height) = image.dimensions();
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("image has no pixels".into()));
    }
    let size = model.config.resolution as u32;
    let small = LabPlanes::from_rgb_resized(image, size);
    let ab = model
        .unet_colorize(&small.lightness_tensor(model.dtype())?, &palette_tensor(&[palette], model.dtype())?)?
        .to_dtype(DType::F32)?
        .flatten_all()?
        .to_vec1::<f32>()?;

    let n = (size * size) as usize;
    let planes: ImageBuffer<Rgb<f32>, Vec<f32>> = ImageBuffer::from_fn(size, size, |x, y| {
        let i = (y * size + x) as usize;
        Rgb([ab[i], ab[n + i], 0.0])
    });
    let planes = if (width, height) == (size, size) {
        planes
    } else {
        imageops::resize(&planes, width, height, FilterType::Triangle)
    };

    Ok(RgbImage::from_fn(width, height, |x, y| {
        let l = rgb_to_lab(image.get_pixel(x, y).0).l;
        let p = planes.get_pixel(x, y).0;
        let lab = LabColor::new(l, p[0] as f64 * AB_SCALE, p[1] as f64 * AB_SCALE);
        Rgb(lab_to_rgb(lab))
    }))
}
