//! Palette quality metrics: diversity, multimodality and the quantized-ab
//! distribution divergence, plus the test-set evaluation that combines them.

use serde::{Deserialize, Serialize};

use crate::color::{ciede2000, quantize_ab, AbBinTable, Palette};
use crate::data::PatRecord;
use crate::tpn::{sample_palettes, SampleOptions, TpnModel};
use crate::{Error, Result};

/// Additive smoothing applied to every bin before renormalizing.
pub const AB_SMOOTHING: f64 = 1e-8;

/// Mean ΔE00 over the 10 unordered color pairs of a palette.
pub fn diversity(palette: &Palette) -> f64 {
    let c = palette.colors();
    let mut total = 0.0;
    let mut n = 0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            total += ciede2000(c[i], c[j]);
            n += 1;
        }
    }
    total / n as f64
}

/// For every ordered pair `(P, Q)` of distinct palettes, the mean over P's
/// colors of the smallest ΔE00 to any of Q's colors; averaged over pairs.
/// Visiting both orders makes the value symmetric.
pub fn multimodality(palettes: &[Palette]) -> Result<f64> {
    if palettes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "multimodality needs at least 2 palettes, got {}",
            palettes.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0;
    for (i, p) in palettes.iter().enumerate() {
        for (j, q) in palettes.iter().enumerate() {
            if i == j {
                continue;
            }
            let sum: f64 = p
                .colors()
                .iter()
                .map(|&a| q.colors().iter().map(|&b| ciede2000(a, b)).fold(f64::INFINITY, f64::min))
                .sum();
            total += sum / p.colors().len() as f64;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Smoothed histogram of the palettes' colors over the ab bins.
pub fn ab_distribution(palettes: &[Palette], table: &AbBinTable) -> Result<Vec<f64>> {
    if palettes.is_empty() {
        return Err(Error::InvalidInput("no palettes to bin".into()));
    }
    let mut counts = vec![0.0; table.len()];
    for p in palettes {
        for &c in p.colors() {
            counts[quantize_ab(c, table)] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    let smoothed: Vec<f64> = counts.iter().map(|c| c / total + AB_SMOOTHING).collect();
    let z: f64 = smoothed.iter().sum();
    Ok(smoothed.into_iter().map(|v| v / z).collect())
}

/// `Σ p ln(p / q)`; zero-probability terms of `p` contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub samples_per_text: usize,
    pub seed: u64,
    pub zero_noise: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            samples_per_text: 10,
            seed: 0,
            zero_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Number of test texts.
    pub texts: usize,
    pub samples_per_text: usize,
    pub diversity_mean: f64,
    pub diversity_std: f64,
    pub multimodality_mean: f64,
    pub multimodality_std: f64,
    /// KL(ground truth || generated) of the quantized-ab distributions.
    pub bin_kl: f64,
    /// Diversity of the ground-truth palettes, for reference.
    pub ground_truth_diversity_mean: f64,
}

/// Samples `samples_per_text` palettes for every test text (seed `seed + i`
/// for text `i`). Diversity and the bin distribution use the first sample of
/// each text; multimodality uses all of them.
pub fn evaluate(model: &TpnModel, records: &[PatRecord], opts: EvalOptions) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    if opts.samples_per_text < 2 {
        return Err(Error::InvalidInput("samples_per_text must be at least 2".into()));
    }
    let sample = |i: usize| -> Result<Vec<Palette>> {
        let s = sample_palettes(
            model,
            &records[i].text,
            SampleOptions {
                count: opts.samples_per_text,
                seed: opts.seed.wrapping_add(i as u64),
                zero_noise: opts.zero_noise,
            },
        )?;
        Ok(s.palettes.into_iter().map(|p| p.palette).collect())
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(records.len());
    let chunk = records.len().div_ceil(threads);
    let sampled: Vec<Vec<Palette>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..records.len())
            .step_by(chunk)
            .map(|start| scope.spawn(move || (start..(start + chunk).min(records.len())).map(sample).collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let firsts: Vec<Palette> = sampled.iter().map(|s| s[0].clone()).collect();
    let diversities: Vec<f64> = firsts.iter().map(diversity).collect();
    let modalities = sampled.iter().map(|s| multimodality(s)).collect::<Result<Vec<_>>>()?;
    let truth: Vec<Palette> = records.iter().map(|r| r.palette.clone()).collect();
    let table = AbBinTable::canonical();
    let bin_kl = kl_divergence(&ab_distribution(&truth, &table)?, &ab_distribution(&firsts, &table)?)?;
    let (diversity_mean, diversity_std) = mean_std(&diversities);
    let (multimodality_mean, multimodality_std) = mean_std(&modalities);
    let truth_div: Vec<f64> = truth.iter().map(diversity).collect();
    Ok(EvalReport {
        texts: records.len(),
        samples_per_text: opts.samples_per_text,
        diversity_mean,
        diversity_std,
        multimodality_mean,
        multimodality_std,
        bin_kl,
        ground_truth_diversity_mean: mean_std(&truth_div).0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::LabColor;

    fn lab(l: f64, a: f64, b: f64) -> LabColor {
        LabColor::new(l, a, b)
    }

    #[test]
    fn monochrome_diversity_is_zero() {
        let p = Palette::new([lab(50.0, 10.0, 10.0); 5]).unwrap();
        assert_eq!(diversity(&p), 0.0);
        assert_eq!(multimodality(&[p.clone(), p.clone(), p]).unwrap(), 0.0);
    }

    #[test]
    fn two_color_palette_diversity() {
        let (a, b) = (lab(30.0, 20.0, -10.0), lab(70.0, -15.0, 40.0));
        let p = Palette::new([a, a, a, b, b]).unwrap();
        assert!((diversity(&p) - 0.6 * ciede2000(a, b)).abs() < 1e-12);
    }

    #[test]
    fn multimodality_needs_two() {
        let p = Palette::new([lab(50.0, 0.0, 0.0); 5]).unwrap();
        assert!(multimodality(&[p]).is_err());
    }

    #[test]
    fn one_bin_distribution_is_one_hot() {
        let t = AbBinTable::canonical();
        let p = Palette::new([lab(50.0, 1.0, 1.0); 5]).unwrap();
        let d = ab_distribution(&[p], &t).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let hot = quantize_ab(lab(50.0, 1.0, 1.0), &t);
        assert!(d[hot] > 1.0 - 1e-5);
        assert!(d.iter().enumerate().all(|(i, &v)| i == hot || v < 1e-7));
        assert!(ab_distribution(&[], &t).is_err());
    }

    #[test]
    fn kl_examples() {
        let v = kl_divergence(&[0.75, 0.25], &[0.5, 0.5]).unwrap();
        assert!((v - 0.130_812_035_941_137_8).abs() < 1e-12);
        assert_eq!(kl_divergence(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!(matches!(kl_divergence(&[1.0], &[0.5, 0.5]), Err(Error::LengthMismatch { .. })));
    }
}
