//! Dominant-color extraction by modified median cut (MMCQ).
//!
//! Pixels are binned into a 5-bit-per-channel histogram. Boxes are split at the
//! population median along their widest axis, first by population and then by
//! population times volume. Each bin keeps exact channel sums, so a box's color
//! is the true mean of its pixels rather than the mean of bin centers.

use image::RgbImage;

use super::{rgb_to_lab_f64, LabColor, Palette, PALETTE_SIZE};
use crate::{Error, Result};

const SIGBITS: u32 = 5;
const SHIFT: u32 = 8 - SIGBITS;
const SIDE: usize = 1 << SIGBITS;
const FRACTION_BY_POPULATION: f64 = 0.75;

#[derive(Clone, Copy, Default)]
struct Bin {
    count: u64,
    sum: [u64; 3],
}

struct Histogram {
    bins: Vec<Bin>,
}

impl Histogram {
    fn new(image: &RgbImage) -> Self {
        let mut bins = vec![Bin::default(); SIDE * SIDE * SIDE];
        for p in image.pixels() {
            let bin = &mut bins[Self::index([p[0] >> SHIFT, p[1] >> SHIFT, p[2] >> SHIFT])];
            bin.count += 1;
            for c in 0..3 {
                bin.sum[c] += p[c] as u64;
            }
        }
        Self { bins }
    }

    fn index(q: [u8; 3]) -> usize {
        ((q[0] as usize) << (2 * SIGBITS)) | ((q[1] as usize) << SIGBITS) | q[2] as usize
    }

    fn get(&self, q: [u8; 3]) -> &Bin {
        &self.bins[Self::index(q)]
    }
}

#[derive(Clone, Debug)]
struct ColorBox {
    lo: [u8; 3],
    hi: [u8; 3],
    count: u64,
    sum: [u64; 3],
}

impl ColorBox {
    /// Tightens `[lo, hi]` to the bins that actually hold pixels.
    fn shrink(hist: &Histogram, lo: [u8; 3], hi: [u8; 3]) -> Option<Self> {
        let mut b = ColorBox {
            lo: [u8::MAX; 3],
            hi: [0; 3],
            count: 0,
            sum: [0; 3],
        };
        for r in lo[0]..=hi[0] {
            for g in lo[1]..=hi[1] {
                for bl in lo[2]..=hi[2] {
                    let bin = hist.get([r, g, bl]);
                    if bin.count == 0 {
                        continue;
                    }
                    let q = [r, g, bl];
                    for c in 0..3 {
                        b.lo[c] = b.lo[c].min(q[c]);
                        b.hi[c] = b.hi[c].max(q[c]);
                        b.sum[c] += bin.sum[c];
                    }
                    b.count += bin.count;
                }
            }
        }
        (b.count > 0).then_some(b)
    }

    fn volume(&self) -> u64 {
        (0..3).map(|c| (self.hi[c] - self.lo[c]) as u64 + 1).product()
    }

    fn splittable(&self) -> bool {
        (0..3).any(|c| self.hi[c] > self.lo[c])
    }

    fn mean_rgb(&self) -> [f64; 3] {
        self.sum.map(|s| s as f64 / self.count as f64)
    }

    fn split(&self, hist: &Histogram) -> (ColorBox, ColorBox) {
        let extent = |c: usize| self.hi[c] - self.lo[c];
        let axis = (0..3).max_by_key(|&c| (extent(c), std::cmp::Reverse(c))).unwrap();

        let mut slice_counts = vec![0u64; extent(axis) as usize + 1];
        for r in self.lo[0]..=self.hi[0] {
            for g in self.lo[1]..=self.hi[1] {
                for b in self.lo[2]..=self.hi[2] {
                    let q = [r, g, b];
                    slice_counts[(q[axis] - self.lo[axis]) as usize] += hist.get(q).count;
                }
            }
        }
        // Last slice index on the low side: first where the running total
        // reaches half, kept strictly below `hi` so both halves are non-empty.
        let mut acc = 0;
        let mut cut = 0;
        for (i, &n) in slice_counts.iter().enumerate() {
            acc += n;
            cut = i;
            if 2 * acc >= self.count {
                break;
            }
        }
        let cut = self.lo[axis] + (cut as u8).min(extent(axis) - 1);

        let mut low_hi = self.hi;
        low_hi[axis] = cut;
        let mut high_lo = self.lo;
        high_lo[axis] = cut + 1;
        let low = ColorBox::shrink(hist, self.lo, low_hi).expect("low half holds the box minimum");
        let high = ColorBox::shrink(hist, high_lo, self.hi).expect("high half holds the box maximum");
        (low, high)
    }
}

fn split_until(boxes: &mut Vec<ColorBox>, hist: &Histogram, target: usize, priority: impl Fn(&ColorBox) -> u64) {
    while boxes.len() < target {
        // Highest priority wins; ties go to the earliest box.
        let pick = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.splittable())
            .max_by_key(|(i, b)| (priority(b), std::cmp::Reverse(*i)))
            .map(|(i, _)| i);
        let Some(i) = pick else { return };
        let (a, b) = boxes[i].split(hist);
        boxes[i] = a;
        boxes.push(b);
    }
}

/// The `k` dominant colors of an image, most populous first.
///
/// When the image has fewer than `k` separable colors the most populous boxes
/// are repeated so exactly `k` colors come back.
pub fn dominant_colors(image: &RgbImage, k: usize) -> Result<Vec<LabColor>> {
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::InvalidInput("image has no pixels".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("palette size must be at least 1".into()));
    }
    let hist = Histogram::new(image);
    let max = (SIDE - 1) as u8;
    let full = ColorBox::shrink(&hist, [0; 3], [max; 3]).expect("non-empty image");

    let mut boxes = vec![full];
    let by_population = ((FRACTION_BY_POPULATION * k as f64).ceil() as usize).max(1);
    split_until(&mut boxes, &hist, by_population, |b| b.count);
    split_until(&mut boxes, &hist, k, |b| b.count * b.volume());

    let mut colored: Vec<(u64, LabColor)> = boxes
        .iter()
        .map(|b| (b.count, rgb_to_lab_f64(b.mean_rgb())))
        .collect();
    sort_by_population(&mut colored);
    let distinct = colored.len();
    for i in 0..k - distinct {
        colored.push(colored[i % distinct]);
    }
    sort_by_population(&mut colored);
    Ok(colored.into_iter().map(|(_, c)| c).collect())
}

fn sort_by_population(colors: &mut [(u64, LabColor)]) {
    colors.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then(x.1.l.total_cmp(&y.1.l))
            .then(x.1.a.total_cmp(&y.1.a))
            .then(x.1.b.total_cmp(&y.1.b))
    });
}

/// Five dominant colors as a [`Palette`].
pub fn extract_dominant_palette(image: &RgbImage) -> Result<Palette> {
    let colors = dominant_colors(image, PALETTE_SIZE)?;
    Palette::from_slice(&colors)
}
