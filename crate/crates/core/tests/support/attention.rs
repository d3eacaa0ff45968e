use candle_core::{DType, Device, Tensor};
use pf_core::tpn::masked_softmax;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(rows: &[Vec<f64>]) -> Tensor {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Tensor::from_vec(flat, (rows.len(), rows[0].len()), &Device::Cpu).unwrap()
}

/// `cases` random score/mask batches: rows sum to one, padding gets exactly
/// zero, and equal scores spread evenly over the valid tokens.
pub fn random_masked_softmax(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let (batch, len) = (rng.random_range(1..5), rng.random_range(1..9));
        let scores: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..len).map(|_| rng.random_range(-30.0..30.0)).collect())
            .collect();
        let mask: Vec<Vec<bool>> = (0..batch)
            .map(|_| {
                let mut m: Vec<bool> = (0..len).map(|_| rng.random_bool(0.6)).collect();
                m[rng.random_range(0..len)] = true;
                m
            })
            .collect();
        let mask_t = matrix(&mask.iter().map(|r| r.iter().map(|&v| v as u8 as f64).collect()).collect::<Vec<_>>());
        let level = rng.random_range(-20.0..20.0);
        let flat = vec![vec![level; len]; batch];

        let alpha = masked_softmax(&matrix(&scores), &mask_t).unwrap().to_dtype(DType::F64).unwrap();
        let uniform = masked_softmax(&matrix(&flat), &mask_t).unwrap();
        for ((row, even), m) in alpha.to_vec2::<f64>().unwrap().iter().zip(uniform.to_vec2::<f64>().unwrap()).zip(&mask) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6, "case {case}: {row:?}");
            let valid = m.iter().filter(|&&v| v).count() as f64;
            for ((a, u), &v) in row.iter().zip(&even).zip(m) {
                if v {
                    assert!(*a >= 0.0);
                    assert!((u - 1.0 / valid).abs() < 1e-12, "case {case}: {even:?}");
                } else {
                    assert_eq!(*a, 0.0, "case {case}");
                    assert_eq!(*u, 0.0, "case {case}");
                }
            }
        }
    }
}
