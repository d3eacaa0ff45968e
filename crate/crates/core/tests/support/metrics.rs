//! The metric implementations against deliberately naive re-implementations.

use pf_core::color::{ciede2000, AbBinTable, LabColor, Palette};
use pf_core::metrics::{ab_distribution, diversity, kl_divergence, multimodality, AB_SMOOTHING};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: usize = 100;
pub const TOL: f64 = 1e-9;

pub fn random_palette(rng: &mut impl Rng) -> Palette {
    let colors: Vec<LabColor> = (0..5)
        .map(|_| {
            LabColor::new(
                rng.random_range(0.0..100.0),
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            )
        })
        .collect();
    Palette::from_slice(&colors).unwrap()
}

pub fn naive_diversity(p: &Palette) -> f64 {
    let c = p.colors();
    let mut pairs = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            if i < j {
                pairs.push(ciede2000(c[i], c[j]));
            }
        }
    }
    assert_eq!(pairs.len(), 10);
    pairs.iter().sum::<f64>() / 10.0
}

pub fn naive_multimodality(set: &[Palette]) -> f64 {
    let directed = |p: &Palette, q: &Palette| {
        let mins: Vec<f64> = p
            .colors()
            .iter()
            .map(|&a| {
                let mut ds: Vec<f64> = q.colors().iter().map(|&b| ciede2000(a, b)).collect();
                ds.sort_by(f64::total_cmp);
                ds[0]
            })
            .collect();
        mins.iter().sum::<f64>() / mins.len() as f64
    };
    let mut values = Vec::new();
    for i in 0..set.len() {
        for j in 0..set.len() {
            if i != j {
                values.push(directed(&set[i], &set[j]));
            }
        }
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn naive_distribution(set: &[Palette], table: &AbBinTable) -> Vec<f64> {
    let mut counts = vec![0usize; table.len()];
    for p in set {
        for c in p.colors() {
            let nearest = table
                .centers()
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| (k, ((c.a - a as f64).powi(2) + (c.b - b as f64).powi(2)).sqrt()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap()
                .0;
            counts[nearest] += 1;
        }
    }
    let n = (set.len() * 5) as f64;
    let raw: Vec<f64> = counts.iter().map(|&c| c as f64 / n + AB_SMOOTHING).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|v| v / z).collect()
}

pub fn naive_kl(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        if p[i] > 0.0 {
            total += p[i] * (p[i].ln() - q[i].ln());
        }
    }
    total
}

pub fn metrics_equal_brute_force() {
    let table = AbBinTable::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for fixture in 0..FIXTURES {
        let n = rng.random_range(2..8);
        let set: Vec<Palette> = (0..n).map(|_| random_palette(&mut rng)).collect();
        let other: Vec<Palette> = (0..rng.random_range(1..8)).map(|_| random_palette(&mut rng)).collect();

        for p in &set {
            assert!((diversity(p) - naive_diversity(p)).abs() < TOL, "fixture {fixture}");
        }
        let m = multimodality(&set).unwrap();
        assert!((m - naive_multimodality(&set)).abs() < TOL, "fixture {fixture}");

        let p = ab_distribution(&set, &table).unwrap();
        let q = ab_distribution(&other, &table).unwrap();
        let (np, nq) = (naive_distribution(&set, &table), naive_distribution(&other, &table));
        for (a, b) in p.iter().zip(&np).chain(q.iter().zip(&nq)) {
            assert!((a - b).abs() < TOL, "fixture {fixture}");
        }
        let kl = kl_divergence(&p, &q).unwrap();
        assert!((kl - naive_kl(&np, &nq)).abs() < TOL, "fixture {fixture}: {kl}");
        assert!(kl >= 0.0);
    }
}

pub fn degenerate_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let c = random_palette(&mut rng).colors()[0];
        let mono = Palette::new([c; 5]).unwrap();
        assert_eq!(diversity(&mono), 0.0);
        let p = random_palette(&mut rng);
        assert_eq!(multimodality(&vec![p.clone(); 10]).unwrap(), 0.0);
        let d = ab_distribution(&[p.clone()], &AbBinTable::canonical()).unwrap();
        assert!(kl_divergence(&d, &d).unwrap().abs() < 1e-15);
    }
}
