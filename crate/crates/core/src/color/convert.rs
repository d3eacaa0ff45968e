use super::LabColor;

// sRGB primaries, D65 reference white.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const DELTA: f64 = 6.0 / 29.0;

fn srgb_to_linear(c: f64) -> f64 {
    if c > 0.04045 {
        ((c + 0.055) / 1.055).powf(2.4)
    } else {
        c / 12.92
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c > 0.0031308 {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    } else {
        12.92 * c
    }
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

/// Converts an sRGB byte triple to Lab.
pub fn rgb_to_lab(rgb: [u8; 3]) -> LabColor {
    rgb_to_lab_f64(rgb.map(f64::from))
}

/// Like [`rgb_to_lab`] for fractional channels on the 0..=255 scale.
pub fn rgb_to_lab_f64(rgb: [f64; 3]) -> LabColor {
    let linear = rgb.map(|c| srgb_to_linear(c / 255.0));
    let xyz = mat_mul(&RGB_TO_XYZ, linear);
    let [fx, fy, fz] = [0, 1, 2].map(|i| lab_f(xyz[i] / WHITE[i]));
    LabColor::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Gamma-encoded sRGB in nominal [0, 1] before any clipping. Components
/// outside [0, 1] mean the color is out of gamut.
pub fn lab_to_rgb_unclipped(lab: LabColor) -> [f64; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [fx, fy, fz]
        .iter()
        .zip(WHITE)
        .map(|(&f, w)| w * lab_f_inv(f))
        .collect::<Vec<_>>();
    mat_mul(&XYZ_TO_RGB, [xyz[0], xyz[1], xyz[2]]).map(linear_to_srgb)
}

/// Converts Lab to sRGB bytes, clipping each channel independently.
pub fn lab_to_rgb(lab: LabColor) -> [u8; 3] {
    lab_to_rgb_unclipped(lab).map(|c| {
        let v = (c * 255.0).round();
        if v.is_nan() {
            0
        } else {
            v.clamp(0.0, 255.0) as u8
        }
    })
}
