use pf_core::nn::objective::kl_gaussian;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const SAMPLES: usize = 1_000_000;

/// `E_q[log q(z) - log p(z)]` with `q = N(mu, diag sigma^2)`, `p = N(0, I)`.
pub fn monte_carlo_kl(mu: &[f64], sigma: &[f64], rng: &mut impl Rng) -> f64 {
    let mut total = 0.0;
    for _ in 0..SAMPLES {
        let mut log_ratio = 0.0;
        for (m, s) in mu.iter().zip(sigma) {
            let e: f64 = StandardNormal.sample(rng);
            let z = m + s * e;
            // log q - log p; the 2π terms cancel
            log_ratio += -0.5 * e * e - s.ln() + 0.5 * z * z;
        }
        total += log_ratio;
    }
    total / SAMPLES as f64
}

pub fn closed_form_matches_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..5 {
        let dim = 4;
        let mu: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let sigma: Vec<f64> = (0..dim).map(|_| rng.random_range(0.4..1.8)).collect();
        let exact = kl_gaussian(&mu, &sigma, dim).unwrap();
        let estimate = monte_carlo_kl(&mu, &sigma, &mut rng);
        let rel = (estimate - exact).abs() / exact;
        assert!(rel < 0.01, "case {case}: closed form {exact}, sampled {estimate} (rel {rel})");
    }
}
