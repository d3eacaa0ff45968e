//! Analytic gradients of every objective against central finite differences.

use pf_core::nn::objective::{
    discriminator_loss_grad, generator_adversarial_grad, huber_grad, kl_gaussian_grad, pcn_generator_loss_grad,
    tpn_generator_loss_grad, LossWeights,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-6;
pub const TOL: f64 = 1e-4;
pub const POINTS: usize = 10;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Checks `grad` against central differences of `f` around `x`.
pub fn check(name: &str, x: &[f64], grad: &[f64], f: impl Fn(&[f64]) -> f64) {
    assert_eq!(x.len(), grad.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + H;
        let up = f(&probe);
        probe[i] = x[i] - H;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * H);
        let e = rel_err(grad[i], numeric);
        assert!(e < TOL, "{name}[{i}]: analytic {} numeric {numeric} (rel {e:e})", grad[i]);
    }
}

pub fn uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Residuals kept away from the Huber kink at |d| = delta.
pub fn huber_pair(rng: &mut impl Rng, n: usize, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let target = uniform(rng, n, -1.0, 1.0);
    let pred = target
        .iter()
        .map(|t| {
            let mut d: f64 = rng.random_range(-3.0 * delta..3.0 * delta);
            while (d.abs() - delta).abs() < 0.05 * delta {
                d = rng.random_range(-3.0 * delta..3.0 * delta);
            }
            t + d
        })
        .collect();
    (pred, target)
}

pub fn huber_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..POINTS {
        let delta = rng.random_range(0.2..2.0);
        let (pred, target) = huber_pair(&mut rng, 12, delta);
        let (_, g) = huber_grad(&pred, &target, delta).unwrap();
        check("huber", &pred, &g, |p| huber_grad(p, &target, delta).unwrap().0);
    }
}

pub fn kl_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..POINTS {
        let dim = rng.random_range(1..6);
        let n = dim * rng.random_range(1..4);
        let mu = uniform(&mut rng, n, -2.0, 2.0);
        let sigma = uniform(&mut rng, n, 0.2, 3.0);
        let (_, g_mu, g_sigma) = kl_gaussian_grad(&mu, &sigma, dim).unwrap();
        check("kl/mu", &mu, &g_mu, |m| kl_gaussian_grad(m, &sigma, dim).unwrap().0);
        check("kl/sigma", &sigma, &g_sigma, |s| kl_gaussian_grad(&mu, s, dim).unwrap().0);
    }
}

pub fn adversarial_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..POINTS {
        let real = uniform(&mut rng, 6, 0.05, 0.95);
        let fake = uniform(&mut rng, 6, 0.05, 0.95);
        let (_, g_real, g_fake) = discriminator_loss_grad(&real, &fake).unwrap();
        check("d/real", &real, &g_real, |r| discriminator_loss_grad(r, &fake).unwrap().0);
        check("d/fake", &fake, &g_fake, |f| discriminator_loss_grad(&real, f).unwrap().0);
        let (_, g) = generator_adversarial_grad(&fake).unwrap();
        check("g/fake", &fake, &g, |f| generator_adversarial_grad(f).unwrap().0);
    }
}

pub fn tpn_generator_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..POINTS {
        let w = LossWeights {
            huber: rng.random_range(1.0..100.0),
            kl: rng.random_range(0.0..1.0),
            delta: 1.0,
        };
        let batch = rng.random_range(1..4);
        let dim = 4;
        let d_fake = uniform(&mut rng, batch, 0.05, 0.95);
        let (pred, target) = huber_pair(&mut rng, batch * 15, w.delta);
        let mu = uniform(&mut rng, batch * 2 * dim, -1.5, 1.5);
        let sigma = uniform(&mut rng, batch * 2 * dim, 0.3, 2.0);
        let f = |d: &[f64], p: &[f64], m: &[f64], s: &[f64]| tpn_generator_loss_grad(d, p, &target, m, s, dim, w).unwrap().value;
        let g = tpn_generator_loss_grad(&d_fake, &pred, &target, &mu, &sigma, dim, w).unwrap();
        check("tpn/d_fake", &d_fake, &g.d_fake, |d| f(d, &pred, &mu, &sigma));
        check("tpn/pred", &pred, &g.pred, |p| f(&d_fake, p, &mu, &sigma));
        check("tpn/mu", &mu, &g.mu, |m| f(&d_fake, &pred, m, &sigma));
        check("tpn/sigma", &sigma, &g.sigma, |s| f(&d_fake, &pred, &mu, s));
    }
}

pub fn pcn_generator_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..POINTS {
        let w = LossWeights {
            huber: rng.random_range(1.0..20.0),
            kl: 0.0,
            delta: rng.random_range(0.3..1.5),
        };
        let d_fake = uniform(&mut rng, 3, 0.05, 0.95);
        let (pred, target) = huber_pair(&mut rng, 3 * 2 * 4 * 4, w.delta);
        let (_, g_fake, g_pred) = pcn_generator_loss_grad(&d_fake, &pred, &target, w).unwrap();
        check("pcn/d_fake", &d_fake, &g_fake, |d| pcn_generator_loss_grad(d, &pred, &target, w).unwrap().0);
        check("pcn/pred", &pred, &g_pred, |p| pcn_generator_loss_grad(&d_fake, p, &target, w).unwrap().0);
    }
}
