//! Deterministic synthetic fixtures: palette-text records, word vectors and
//! color images. Content words carry an anchor color so text and palette are
//! correlated the way a real corpus would be.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{PatRecord, Vocabulary, EMBEDDING_DIM, PAD_ID};
use crate::color::{lab_to_rgb, LabColor, Palette};

const WORDS: &[(&str, [f64; 3])] = &[
    ("sunset", [60.0, 45.0, 50.0]),
    ("ocean", [45.0, -10.0, -40.0]),
    ("forest", [40.0, -35.0, 30.0]),
    ("lavender", [70.0, 20.0, -25.0]),
    ("lemon", [90.0, -10.0, 70.0]),
    ("cherry", [45.0, 60.0, 25.0]),
    ("sand", [80.0, 5.0, 20.0]),
    ("midnight", [15.0, 5.0, -25.0]),
    ("mint", [85.0, -30.0, 10.0]),
    ("rust", [45.0, 35.0, 40.0]),
    ("rose", [65.0, 40.0, 5.0]),
    ("slate", [50.0, -3.0, -10.0]),
    ("autumn", [55.0, 25.0, 45.0]),
    ("breeze", [85.0, -10.0, -10.0]),
    ("coral", [65.0, 45.0, 30.0]),
    ("olive", [50.0, -10.0, 40.0]),
    ("plum", [30.0, 35.0, -20.0]),
    ("ice", [92.0, -5.0, -8.0]),
    ("ember", [40.0, 50.0, 45.0]),
    ("moss", [45.0, -25.0, 30.0]),
    ("denim", [40.0, 0.0, -35.0]),
    ("peach", [80.0, 20.0, 25.0]),
    ("charcoal", [25.0, 0.0, -2.0]),
    ("gold", [75.0, 5.0, 65.0]),
];

const FILLERS: &[&str] = &["and", "to", "the", "of", "in", "with"];

/// `n` records; texts hold one to three content words.
pub fn synthetic_pat(n: usize, seed: u64) -> Vec<PatRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter_l = Normal::new(0.0, 4.0).unwrap();
    let jitter_ab = Normal::new(0.0, 6.0).unwrap();
    (0..n)
        .map(|_| {
            let count = rng.random_range(1..=3);
            let words: Vec<usize> = (0..count).map(|_| rng.random_range(0..WORDS.len())).collect();
            let mut text = String::new();
            for (i, &w) in words.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                    if rng.random_bool(0.5) {
                        text.push_str(FILLERS[rng.random_range(0..FILLERS.len())]);
                        text.push(' ');
                    }
                }
                text.push_str(WORDS[w].0);
            }
            let colors: Vec<LabColor> = (0..5)
                .map(|i| {
                    let [l, a, b] = WORDS[words[i % words.len()]].1;
                    let ramp = (i as f64 - 2.0) * 8.0;
                    LabColor::new(
                        (l + ramp + jitter_l.sample(&mut rng)).clamp(5.0, 95.0),
                        (a + jitter_ab.sample(&mut rng)).clamp(-100.0, 100.0),
                        (b + jitter_ab.sample(&mut rng)).clamp(-100.0, 100.0),
                    )
                })
                .collect();
            let palette = Palette::from_slice(&colors).expect("clamped into range");
            PatRecord::new(text, palette).expect("non-empty text")
        })
        .collect()
}

/// Random word vectors for every vocabulary token except every `skip_every`-th
/// one, which is left out to exercise out-of-vocabulary initialization.
pub fn synthetic_embeddings(vocab: &Vocabulary, skip_every: usize, seed: u64) -> Vec<(String, Vec<f32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.3).unwrap();
    vocab
        .tokens()
        .iter()
        .enumerate()
        .filter(|&(id, _)| id as u32 != PAD_ID && (skip_every == 0 || id % skip_every != 0))
        .map(|(_, tok)| {
            let v = (0..EMBEDDING_DIM).map(|_| normal.sample(&mut rng) as f32).collect();
            (tok.clone(), v)
        })
        .collect()
}

/// `n` square color images: a lightness gradient background with a few
/// saturated rectangles and discs.
pub fn synthetic_images(n: usize, size: u32, seed: u64) -> Vec<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let hue = |rng: &mut ChaCha8Rng, l: f64| {
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let chroma = rng.random_range(45.0..75.0);
                lab_to_rgb(LabColor::new(l, chroma * angle.cos(), chroma * angle.sin()))
            };
            let bg_top = hue(&mut rng, 80.0);
            let bg_bottom = hue(&mut rng, 35.0);
            let mut img = RgbImage::from_fn(size, size, |_, y| {
                let t = y as f64 / (size - 1).max(1) as f64;
                Rgb([0, 1, 2].map(|c| (bg_top[c] as f64 * (1.0 - t) + bg_bottom[c] as f64 * t).round() as u8))
            });
            let shapes = rng.random_range(2..=3);
            for s in 0..shapes {
                let l = rng.random_range(30.0..85.0);
                let color = hue(&mut rng, l);
                let w = rng.random_range(size / 5..size / 2);
                let h = rng.random_range(size / 5..size / 2);
                let x0 = rng.random_range(0..size - w);
                let y0 = rng.random_range(0..size - h);
                let disc = s % 2 == 1;
                for y in y0..y0 + h {
                    for x in x0..x0 + w {
                        if disc {
                            let dx = (x as f64 - (x0 + w / 2) as f64) / (w as f64 / 2.0);
                            let dy = (y as f64 - (y0 + h / 2) as f64) / (h as f64 / 2.0);
                            if dx * dx + dy * dy > 1.0 {
                                continue;
                            }
                        }
                        img.put_pixel(x, y, Rgb(color));
                    }
                }
            }
            img
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_by_seed() {
        assert_eq!(synthetic_pat(20, 3), synthetic_pat(20, 3));
        assert_ne!(synthetic_pat(20, 3), synthetic_pat(20, 4));
        assert_eq!(synthetic_images(2, 16, 1), synthetic_images(2, 16, 1));
    }

    #[test]
    fn embeddings_skip_some_tokens() {
        let recs = synthetic_pat(200, 0);
        let vocab = Vocabulary::from_texts(recs.iter().map(|r| r.text.as_str()));
        let e = synthetic_embeddings(&vocab, 5, 0);
        assert!(e.len() < vocab.len() - 1);
        assert!(e.iter().all(|(_, v)| v.len() == EMBEDDING_DIM));
    }
}
