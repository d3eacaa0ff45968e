use pf_core::color::{ciede2000, lab_to_rgb, lab_to_rgb_unclipped, rgb_to_lab, rgb_to_lab_f64, LabColor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn lab(v: [f64; 3]) -> LabColor {
    LabColor::new(v[0], v[1], v[2])
}

// Sharma, Wu & Dalal test pairs. The third column is an independent
// implementation's value at full precision; the published table rounds these
// to four decimals.
pub const SHARMA: [([f64; 3], [f64; 3], f64); 34] = [
    ([50.0000, 2.6772, -79.7751], [50.0000, 0.0000, -82.7485], 2.042459680157),
    ([50.0000, 3.1571, -77.2803], [50.0000, 0.0000, -82.7485], 2.861510174748),
    ([50.0000, 2.8361, -74.0200], [50.0000, 0.0000, -82.7485], 3.441190598691),
    ([50.0000, -1.3802, -84.2814], [50.0000, 0.0000, -82.7485], 0.999998864752),
    ([50.0000, -1.1848, -84.8006], [50.0000, 0.0000, -82.7485], 1.000004701074),
    ([50.0000, -0.9009, -85.5211], [50.0000, 0.0000, -82.7485], 1.000012967624),
    ([50.0000, 0.0000, 0.0000], [50.0000, -1.0000, 2.0000], 2.366858819172),
    ([50.0000, -1.0000, 2.0000], [50.0000, 0.0000, 0.0000], 2.366858819172),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0009], 7.179172011349),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0010], 7.179162640002),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0011], 7.219472152286),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0012], 7.219474212471),
    ([50.0000, -0.0010, 2.4900], [50.0000, 0.0009, -2.4900], 4.804521685775),
    ([50.0000, -0.0010, 2.4900], [50.0000, 0.0010, -2.4900], 4.804524508212),
    ([50.0000, -0.0010, 2.4900], [50.0000, 0.0011, -2.4900], 4.746071113807),
    ([50.0000, 2.5000, 0.0000], [50.0000, 0.0000, -2.5000], 4.306482095827),
    ([50.0000, 2.5000, 0.0000], [73.0000, 25.0000, -18.0000], 27.149231300746),
    ([50.0000, 2.5000, 0.0000], [61.0000, -5.0000, 29.0000], 22.897692469807),
    ([50.0000, 2.5000, 0.0000], [56.0000, -27.0000, -3.0000], 31.903004646864),
    ([50.0000, 2.5000, 0.0000], [58.0000, 24.0000, 15.0000], 19.453521433393),
    ([50.0000, 2.5000, 0.0000], [50.0000, 3.1736, 0.5854], 1.000026343370),
    ([50.0000, 2.5000, 0.0000], [50.0000, 3.2972, 0.0000], 0.999972872973),
    ([50.0000, 2.5000, 0.0000], [50.0000, 1.8634, 0.5757], 1.000049498977),
    ([50.0000, 2.5000, 0.0000], [50.0000, 3.2592, 0.3350], 1.000034761715),
    ([60.2574, -34.0099, 36.2677], [60.4626, -34.1751, 39.4387], 1.264420013599),
    ([63.0109, -31.0961, -5.8663], [62.8187, -29.7946, -4.0864], 1.262959298262),
    ([61.2901, 3.7196, -5.3901], [61.4292, 2.2480, -4.9620], 1.873070500118),
    ([35.0831, -44.1164, 3.7933], [35.0232, -40.0716, 1.5901], 1.864495234159),
    ([22.7233, 20.0904, -46.6940], [23.0331, 14.9730, -42.5619], 2.037258269709),
    ([36.4612, 47.8580, 18.3852], [36.2715, 50.5065, 21.2231], 1.414577922494),
    ([90.8027, -2.0831, 1.4410], [91.1528, -1.6435, 0.0447], 1.444129078093),
    ([90.9257, -0.5406, -0.9208], [88.6381, -0.8985, -0.7239], 1.538117005440),
    ([6.7747, -0.2908, -2.4247], [5.8714, -0.0985, -2.2286], 0.637727671884),
    ([2.0776, 0.0795, -1.1350], [0.9033, -0.0636, -0.5514], 0.908232839603),
];

pub fn sharma_pairs() {
    for (i, (a, b, expected)) in SHARMA.iter().enumerate() {
        let d = ciede2000(lab(*a), lab(*b));
        assert!((d - expected).abs() < 1e-4, "pair {}: {d} vs {expected}", i + 1);
        let swapped = ciede2000(lab(*b), lab(*a));
        assert!((d - swapped).abs() < 1e-12, "pair {} not symmetric", i + 1);
    }
}

// sRGB -> Lab from an independent implementation. It uses slightly different
// rounding of the D65 matrix, hence the loose tolerance.
pub const SRGB_LAB: [([u8; 3], [f64; 3]); 10] = [
    ([255, 0, 0], [53.2405879437, 80.0923082257, 67.2027510444]),
    ([0, 255, 0], [87.7350994883, -86.1830297444, 83.1797031754]),
    ([0, 0, 255], [32.2956725650, 79.1855909118, -107.8573002067]),
    ([255, 255, 0], [97.1395070397, -21.5546810170, 94.4781222765]),
    ([0, 255, 255], [91.1133014407, -48.0905962330, -14.1263298201]),
    ([255, 0, 255], [60.3235065274, 98.2330538631, -60.8210152441]),
    ([128, 128, 128], [53.5850134522, -0.0014726456, 0.0027914515]),
    ([18, 52, 86], [21.0416100539, 1.0523062624, -24.0991681144]),
    ([250, 128, 114], [67.2640071168, 45.2255366840, 29.0964888283]),
    ([1, 2, 3], [0.5098250675, -0.1224903048, -0.4704960766]),
];

/// Largest per-channel error, in 0..255 units.
pub fn round_trip_error(rgb: [f64; 3]) -> f64 {
    let back = lab_to_rgb_unclipped(rgb_to_lab_f64(rgb));
    rgb.iter().zip(back).map(|(a, b)| (a - 255.0 * b).abs()).fold(0.0, f64::max)
}

pub fn lattice_round_trip() {
    let step = 255.0 / 31.0;
    let mut worst: f64 = 0.0;
    for r in 0..32 {
        for g in 0..32 {
            for b in 0..32 {
                let rgb = [r as f64 * step, g as f64 * step, b as f64 * step];
                worst = worst.max(round_trip_error(rgb));
                let bytes = rgb.map(|v| v.round() as u8);
                assert_eq!(lab_to_rgb(rgb_to_lab(bytes)), bytes);
            }
        }
    }
    assert!(worst <= 1.0, "worst lattice error {worst} (in 0..255 units)");
}

pub fn random_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let rgb = [0; 3].map(|_: i32| rng.random_range(0.0..=255.0));
        let err = round_trip_error(rgb);
        assert!(err <= 1.0, "{rgb:?}: {err}");
    }
}
