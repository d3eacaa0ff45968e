//! Color-science kernel: CIE Lab types, sRGB conversion, CIEDE2000,
//! ab-gamut quantization and dominant-color extraction.

mod ab_bins;
mod ciede2000;
mod convert;
mod extract;

pub use ab_bins::{quantize_ab, AbBinTable, AB_BIN_SPACING};
pub use ciede2000::ciede2000;
pub use convert::{lab_to_rgb, lab_to_rgb_unclipped, rgb_to_lab, rgb_to_lab_f64};
pub use extract::{dominant_colors, extract_dominant_palette};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of colors in a palette.
pub const PALETTE_SIZE: usize = 5;

/// Flattened palette width (five Lab triples).
pub const PALETTE_DIM: usize = PALETTE_SIZE * 3;

/// Half-range used to map a/b into [-1, 1].
pub const AB_SCALE: f64 = 110.0;

/// A CIE Lab color (D65 white point, 2° observer).
///
/// Serialized as a bare `[L, a, b]` array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite Lab color {self:?}")));
        }
        if !(0.0..=100.0).contains(&self.l) {
            return Err(Error::InvalidInput(format!(
                "lightness {} outside [0, 100]",
                self.l
            )));
        }
        Ok(())
    }

    /// Maps to the [-1, 1] cube the networks operate in.
    pub fn normalized(&self) -> [f64; 3] {
        [self.l / 50.0 - 1.0, self.a / AB_SCALE, self.b / AB_SCALE]
    }

    /// Inverse of [`LabColor::normalized`]; lightness is clamped into [0, 100].
    pub fn from_normalized(v: [f64; 3]) -> Self {
        Self {
            l: ((v[0] + 1.0) * 50.0).clamp(0.0, 100.0),
            a: v[1] * AB_SCALE,
            b: v[2] * AB_SCALE,
        }
    }

    pub fn to_rgb(&self) -> [u8; 3] {
        lab_to_rgb(*self)
    }

    pub fn hex(&self) -> String {
        let [r, g, b] = self.to_rgb();
        format!("#{r:02X}{g:02X}{b:02X}")
    }
}

impl From<[f64; 3]> for LabColor {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<LabColor> for [f64; 3] {
    fn from(c: LabColor) -> Self {
        [c.l, c.a, c.b]
    }
}

/// Five ordered Lab colors.
///
/// JSON form is `{"colors": [[L,a,b] x5], "hex": ["#RRGGBB" x5]}`; `hex` is
/// derived and ignored on input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PaletteJson", into = "PaletteJson")]
pub struct Palette {
    colors: [LabColor; PALETTE_SIZE],
}

impl Palette {
    pub fn new(colors: [LabColor; PALETTE_SIZE]) -> Result<Self> {
        for c in &colors {
            c.validate()?;
        }
        Ok(Self { colors })
    }

    pub fn from_slice(colors: &[LabColor]) -> Result<Self> {
        let colors: [LabColor; PALETTE_SIZE] = colors
            .try_into()
            .map_err(|_| Error::PaletteArity { line: None, found: colors.len() })?;
        Self::new(colors)
    }

    pub fn colors(&self) -> &[LabColor; PALETTE_SIZE] {
        &self.colors
    }

    /// Raw Lab values, color-major.
    pub fn to_flat(&self) -> [f64; PALETTE_DIM] {
        let mut out = [0.0; PALETTE_DIM];
        for (i, c) in self.colors.iter().enumerate() {
            out[i * 3..i * 3 + 3].copy_from_slice(&[c.l, c.a, c.b]);
        }
        out
    }

    /// Network-space values in [-1, 1], color-major.
    pub fn to_normalized(&self) -> [f32; PALETTE_DIM] {
        let mut out = [0.0; PALETTE_DIM];
        for (i, c) in self.colors.iter().enumerate() {
            for (j, v) in c.normalized().into_iter().enumerate() {
                out[i * 3 + j] = v as f32;
            }
        }
        out
    }

    pub fn from_normalized(v: &[f32]) -> Result<Self> {
        if v.len() != PALETTE_DIM {
            return Err(Error::PaletteArity { line: None, found: v.len() / 3 });
        }
        let mut colors = [LabColor::new(0.0, 0.0, 0.0); PALETTE_SIZE];
        for (i, c) in colors.iter_mut().enumerate() {
            let x = &v[i * 3..i * 3 + 3];
            *c = LabColor::from_normalized([x[0] as f64, x[1] as f64, x[2] as f64]);
        }
        Self::new(colors)
    }

    pub fn hex(&self) -> [String; PALETTE_SIZE] {
        self.colors.map(|c| c.hex())
    }
}

#[derive(Serialize, Deserialize)]
struct PaletteJson {
    colors: Vec<LabColor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hex: Option<Vec<String>>,
}

impl TryFrom<PaletteJson> for Palette {
    type Error = Error;

    fn try_from(p: PaletteJson) -> Result<Self> {
        Palette::from_slice(&p.colors)
    }
}

impl From<Palette> for PaletteJson {
    fn from(p: Palette) -> Self {
        PaletteJson {
            colors: p.colors.to_vec(),
            hex: Some(p.hex().to_vec()),
        }
    }
}
