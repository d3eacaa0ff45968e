use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::LabColor;
use crate::{Error, Result};

/// Grid spacing of the ab quantization, in Lab units.
pub const AB_BIN_SPACING: i32 = 10;

const CANONICAL: &str = include_str!("../../fixtures/ab_bins.json");

/// Quantization of the ab plane into the spacing-10 grid cells that sRGB
/// colors actually reach.
#[derive(Debug, Clone, PartialEq)]
pub struct AbBinTable {
    centers: Vec<(i32, i32)>,
    index: HashMap<(i32, i32), usize>,
}

#[derive(Serialize, Deserialize)]
struct AbBinFile {
    spacing: i32,
    centers: Vec<[i32; 2]>,
}

impl AbBinTable {
    /// Derives the table from scratch: a cell is kept when at least one of the
    /// 2^24 sRGB colors quantizes into it. Slow-ish; prefer [`AbBinTable::canonical`].
    pub fn build() -> Self {
        let lut: Vec<f64> = (0..=255u8)
            .map(|c| {
                let c = c as f64 / 255.0;
                if c > 0.04045 {
                    ((c + 0.055) / 1.055).powf(2.4)
                } else {
                    c / 12.92
                }
            })
            .collect();
        let mut cells = BTreeSet::new();
        for r in 0..=255usize {
            for g in 0..=255usize {
                for b in 0..=255usize {
                    let lab = linear_to_lab(lut[r], lut[g], lut[b]);
                    cells.insert(grid_cell(lab.a, lab.b));
                }
            }
        }
        Self::from_centers(
            cells
                .into_iter()
                .map(|(i, j)| (i * AB_BIN_SPACING, j * AB_BIN_SPACING))
                .collect(),
        )
    }

    /// The persisted table shipped with the crate.
    pub fn canonical() -> Self {
        Self::from_json(CANONICAL).expect("bundled ab bin table is valid")
    }

    fn from_centers(mut centers: Vec<(i32, i32)>) -> Self {
        centers.sort_unstable();
        centers.dedup();
        let index = centers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self { centers, index }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: AbBinFile = serde_json::from_str(s)?;
        if file.spacing != AB_BIN_SPACING {
            return Err(Error::InvalidInput(format!(
                "ab bin spacing {} (expected {AB_BIN_SPACING})",
                file.spacing
            )));
        }
        if file.centers.is_empty() {
            return Err(Error::InvalidInput("empty ab bin table".into()));
        }
        if let Some(c) = file.centers.iter().find(|c| c[0] % AB_BIN_SPACING != 0 || c[1] % AB_BIN_SPACING != 0) {
            return Err(Error::InvalidInput(format!("ab bin center {c:?} is off-grid")));
        }
        Ok(Self::from_centers(file.centers.iter().map(|c| (c[0], c[1])).collect()))
    }

    pub fn to_json(&self) -> String {
        let file = AbBinFile {
            spacing: AB_BIN_SPACING,
            centers: self.centers.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[(i32, i32)] {
        &self.centers
    }

    pub fn bin_of_center(&self, a: i32, b: i32) -> Option<usize> {
        self.index.get(&(a, b)).copied()
    }
}

fn linear_to_lab(r: f64, g: f64, b: f64) -> LabColor {
    // Same chain as rgb_to_lab, starting from linear light.
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let f = |t: f64| {
        const D: f64 = 6.0 / 29.0;
        if t > D * D * D {
            t.cbrt()
        } else {
            t / (3.0 * D * D) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x / 0.95047), f(y), f(z / 1.08883));
    LabColor::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

fn grid_cell(a: f64, b: f64) -> (i32, i32) {
    let s = AB_BIN_SPACING as f64;
    ((a / s).round() as i32, (b / s).round() as i32)
}

/// Nearest bin center in the ab plane. Points whose grid cell is not in the
/// table snap to the closest existing center.
pub fn quantize_ab(color: LabColor, table: &AbBinTable) -> usize {
    let (i, j) = grid_cell(color.a, color.b);
    if let Some(bin) = table.bin_of_center(i * AB_BIN_SPACING, j * AB_BIN_SPACING) {
        return bin;
    }
    let mut best = (f64::INFINITY, 0);
    for (k, &(a, b)) in table.centers.iter().enumerate() {
        let d = (color.a - a as f64).powi(2) + (color.b - b as f64).powi(2);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}
