//! Adversarial, Huber and KL objectives.
//!
//! Each objective exists twice: as a closed-form `f64` function returning the
//! value together with its analytic gradient, and as a tensor expression used
//! by the training loops (gradients via autograd). Tests hold both to central
//! finite differences.

use candle_core::Tensor;

use crate::{Error, Result};

/// Scores are kept this far away from 0 and 1 before taking logs.
pub const SCORE_EPS: f64 = 1e-7;

/// Default Huber threshold.
pub const HUBER_DELTA: f64 = 1.0;

fn clamp_score(s: f64) -> f64 {
    s.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

// d/ds of clamp: 1 strictly inside, 0 on the flat parts.
fn clamp_slope(s: f64) -> f64 {
    if (SCORE_EPS..=1.0 - SCORE_EPS).contains(&s) {
        1.0
    } else {
        0.0
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(Error::InvalidInput("empty input".into()));
    }
    Ok(())
}

/// Mean elementwise Huber loss.
pub fn huber(pred: &[f64], target: &[f64], delta: f64) -> Result<f64> {
    Ok(huber_grad(pred, target, delta)?.0)
}

/// Huber value and its gradient with respect to `pred`.
pub fn huber_grad(pred: &[f64], target: &[f64], delta: f64) -> Result<(f64, Vec<f64>)> {
    check_len(pred.len(), target.len())?;
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("huber delta must be positive, got {delta}")));
    }
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            if d.abs() <= delta {
                value += 0.5 * d * d;
            } else {
                value += delta * d.abs() - 0.5 * delta * delta;
            }
            d.clamp(-delta, delta) / n
        })
        .collect();
    Ok((value / n, grad))
}

/// Closed-form `KL(N(mu, diag sigma^2) || N(0, I))`, summed over the
/// `dim` components of each token and averaged over tokens.
///
/// Returns the value and the gradients with respect to `mu` and `sigma`.
pub fn kl_gaussian_grad(mu: &[f64], sigma: &[f64], dim: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_len(mu.len(), sigma.len())?;
    if dim == 0 || mu.len() % dim != 0 {
        return Err(Error::Shape(format!("{} values do not split into {dim}-d tokens", mu.len())));
    }
    if let Some(s) = sigma.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {s}")));
    }
    let tokens = (mu.len() / dim) as f64;
    let value = mu
        .iter()
        .zip(sigma)
        .map(|(m, s)| 0.5 * (m * m + s * s - 1.0 - (s * s).ln()))
        .sum::<f64>()
        / tokens;
    let d_mu = mu.iter().map(|m| m / tokens).collect();
    let d_sigma = sigma.iter().map(|s| (s - 1.0 / s) / tokens).collect();
    Ok((value, d_mu, d_sigma))
}

pub fn kl_gaussian(mu: &[f64], sigma: &[f64], dim: usize) -> Result<f64> {
    Ok(kl_gaussian_grad(mu, sigma, dim)?.0)
}

/// Generator adversarial term `mean log(1 - D(fake))` and its gradient.
pub fn generator_adversarial_grad(d_fake: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(d_fake.len(), d_fake.len())?;
    let n = d_fake.len() as f64;
    let value = d_fake.iter().map(|&s| (1.0 - clamp_score(s)).ln()).sum::<f64>() / n;
    let grad = d_fake
        .iter()
        .map(|&s| -clamp_slope(s) / (1.0 - clamp_score(s)) / n)
        .collect();
    Ok((value, grad))
}

/// Discriminator loss `-mean[log D(real) + log(1 - D(fake))]` and the
/// gradients with respect to the real and fake scores.
pub fn discriminator_loss_grad(d_real: &[f64], d_fake: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_len(d_real.len(), d_fake.len())?;
    let n = d_real.len() as f64;
    let value = -d_real
        .iter()
        .zip(d_fake)
        .map(|(&r, &f)| clamp_score(r).ln() + (1.0 - clamp_score(f)).ln())
        .sum::<f64>()
        / n;
    let g_real = d_real.iter().map(|&r| -clamp_slope(r) / clamp_score(r) / n).collect();
    let g_fake = d_fake
        .iter()
        .map(|&f| clamp_slope(f) / (1.0 - clamp_score(f)) / n)
        .collect();
    Ok((value, g_real, g_fake))
}

pub fn discriminator_loss(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    Ok(discriminator_loss_grad(d_real, d_fake)?.0)
}

/// Value and gradients of the text-to-palette generator objective.
#[derive(Debug, Clone)]
pub struct TpnGeneratorGrad {
    pub value: f64,
    pub d_fake: Vec<f64>,
    pub pred: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Weights of the generator objective terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub huber: f64,
    pub kl: f64,
    pub delta: f64,
}

impl LossWeights {
    pub const TPN: LossWeights = LossWeights {
        huber: 100.0,
        kl: 0.5,
        delta: HUBER_DELTA,
    };
    pub const PCN: LossWeights = LossWeights {
        huber: 10.0,
        kl: 0.0,
        delta: HUBER_DELTA,
    };
}

/// `log(1 - D(c̄, ŷ)) + λ_H Huber(ŷ, y) + λ_KL KL`, batch means throughout.
pub fn tpn_generator_loss_grad(
    d_fake: &[f64],
    pred: &[f64],
    target: &[f64],
    mu: &[f64],
    sigma: &[f64],
    dim: usize,
    w: LossWeights,
) -> Result<TpnGeneratorGrad> {
    let (adv, g_fake) = generator_adversarial_grad(d_fake)?;
    let (hub, g_pred) = huber_grad(pred, target, w.delta)?;
    let (kl, g_mu, g_sigma) = kl_gaussian_grad(mu, sigma, dim)?;
    Ok(TpnGeneratorGrad {
        value: adv + w.huber * hub + w.kl * kl,
        d_fake: g_fake,
        pred: g_pred.into_iter().map(|g| w.huber * g).collect(),
        mu: g_mu.into_iter().map(|g| w.kl * g).collect(),
        sigma: g_sigma.into_iter().map(|g| w.kl * g).collect(),
    })
}

/// `log(1 - D(p, Î)) + λ_H Huber(Î, I)`; returns value and gradients with
/// respect to the fake scores and the prediction.
pub fn pcn_generator_loss_grad(
    d_fake: &[f64],
    pred: &[f64],
    target: &[f64],
    w: LossWeights,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (adv, g_fake) = generator_adversarial_grad(d_fake)?;
    let (hub, g_pred) = huber_grad(pred, target, w.delta)?;
    Ok((adv + w.huber * hub, g_fake, g_pred.into_iter().map(|g| w.huber * g).collect()))
}

// ---- tensor forms -------------------------------------------------------

/// Mean Huber over all elements.
pub fn huber_t(pred: &Tensor, target: &Tensor, delta: f64) -> Result<Tensor> {
    let abs = (pred - target)?.abs()?;
    let quad = abs.clamp(0.0, delta)?;
    let lin = (&abs - &quad)?;
    Ok(((quad.sqr()? * 0.5)? + (lin * delta)?)?.mean_all()?)
}

/// KL term from per-token `mu` and `logvar` (both `(batch, T, dim)`) and a
/// `(batch, T)` 0/1 mask; averaged over valid tokens.
pub fn kl_gaussian_t(mu: &Tensor, logvar: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let per_dim = ((mu.sqr()? + logvar.exp()?)? - logvar)?.affine(0.5, -0.5)?;
    let per_token = per_dim.sum(candle_core::D::Minus1)?;
    let total = (per_token * mask)?.sum_all()?;
    Ok(total.broadcast_div(&mask.sum_all()?)?)
}

fn clamp_t(scores: &Tensor) -> Result<Tensor> {
    Ok(scores.clamp(SCORE_EPS, 1.0 - SCORE_EPS)?)
}

/// `mean log(1 - D(fake))`.
pub fn generator_adversarial_t(d_fake: &Tensor) -> Result<Tensor> {
    Ok(clamp_t(d_fake)?.affine(-1.0, 1.0)?.log()?.mean_all()?)
}

/// `-mean[log D(real) + log(1 - D(fake))]`.
pub fn discriminator_loss_t(d_real: &Tensor, d_fake: &Tensor) -> Result<Tensor> {
    let real = clamp_t(d_real)?.log()?;
    let fake = clamp_t(d_fake)?.affine(-1.0, 1.0)?.log()?;
    Ok((real + fake)?.mean_all()?.neg()?)
}
