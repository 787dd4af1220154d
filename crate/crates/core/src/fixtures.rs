//! Deterministic procedural test images.
//!
//! Everything here is generated from closed-form expressions and a fixed
//! integer hash, so the fixtures are identical on every platform and carry no
//! third-party license.

use std::f64::consts::PI;

use crate::image::{RgbImage, ScalarField};

/// Column index of the first pixel on the bright side of [`step_field`].
pub fn step_edge_column(width: usize) -> usize {
    width / 2
}

/// Two flat regions, 0.25 on the left and 0.75 on the right.
pub fn step_field(height: usize, width: usize) -> ScalarField {
    let edge = step_edge_column(width);
    ScalarField::from_fn(height, width, |_, x| if x < edge { 0.25 } else { 0.75 })
}

/// [`step_field`] plus a fine sinusoidal texture of the given amplitude.
pub fn step_sine_field(height: usize, width: usize, amplitude: f64) -> ScalarField {
    let step = step_field(height, width);
    ScalarField::from_fn(height, width, |y, x| {
        let t = (PI * x as f64 / 2.0 + PI / 4.0).sin() * (PI * y as f64 / 2.0 + PI / 4.0).sin();
        step.get(y, x) + 2.0 * amplitude * t
    })
}

/// The 16×16 structure-plus-texture fixture: a 0.5 step with 0.02 texture.
pub fn step_sine_16() -> ScalarField {
    step_sine_field(16, 16, 0.02)
}

pub fn gray_image(f: &ScalarField) -> RgbImage {
    RgbImage::from_fn(f.height(), f.width(), |y, x| [f.get(y, x); 3])
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix(seed ^ splitmix((ix as u64).wrapping_mul(0x1f1f_1f1f) ^ (iy as u64) << 32));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = (x - fx, y - fy);
    let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
    let (ix, iy) = (fx as i64, fy as i64);
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

/// Fractal value noise in `[0, 1]`; `scale` is the coarsest feature size in
/// unit coordinates.
fn fbm(seed: u64, u: f64, v: f64, scale: f64, octaves: u32) -> f64 {
    let (mut amp, mut freq, mut sum, mut norm) = (1.0, 1.0 / scale, 0.0, 0.0);
    for o in 0..octaves {
        sum += amp * value_noise(seed.wrapping_add(o as u64 * 7919), u * freq, v * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

fn scale(c: [f64; 3], s: f64) -> [f64; 3] {
    c.map(|v| v * s)
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Names of the bundled scenes, in corpus order.
pub const SCENES: [&str; 6] = ["harbour", "hills", "city", "still_life", "foliage", "fabric"];

/// Renders one named scene. `u` runs left to right and `v` top to bottom,
/// both in `[0, 1]`, so scenes can be rendered at any resolution.
pub fn scene(name: &str, height: usize, width: usize) -> Option<RgbImage> {
    let render: fn(f64, f64) -> [f64; 3] = match name {
        "harbour" => harbour,
        "hills" => hills,
        "city" => city,
        "still_life" => still_life,
        "foliage" => foliage,
        "fabric" => fabric,
        _ => return None,
    };
    let (hd, wd) = ((height.max(2) - 1) as f64, (width.max(2) - 1) as f64);
    Some(RgbImage::from_fn(height, width, |y, x| {
        render(x as f64 / wd, y as f64 / hd)
    }))
}

/// All six scenes at the given size.
pub fn corpus(height: usize, width: usize) -> Vec<(&'static str, RgbImage)> {
    SCENES
        .iter()
        .map(|&n| (n, scene(n, height, width).expect("known scene")))
        .collect()
}

fn harbour(u: f64, v: f64) -> [f64; 3] {
    let horizon = 0.45 + 0.02 * (u * 7.0).sin();
    let sky = mix([0.55, 0.7, 0.9], [0.9, 0.85, 0.75], v / horizon);
    let clouds = fbm(11, u, v, 0.3, 4);
    let mut c = if v < horizon {
        mix(sky, [0.95, 0.95, 0.95], smoothstep(0.55, 0.75, clouds))
    } else {
        let waves = 0.5 + 0.5 * (40.0 * v + 6.0 * fbm(12, u, v, 0.2, 3)).sin();
        mix(
            [0.1, 0.3, 0.45],
            [0.35, 0.55, 0.65],
            0.6 * waves + 0.4 * (v - horizon),
        )
    };
    // hull and cabin
    let hull = v > horizon - 0.02 && v < horizon + 0.08 && (u - 0.5).abs() < 0.22 - (v - horizon).max(0.0);
    if hull {
        c = [0.6, 0.15, 0.1];
    }
    if v > horizon - 0.12 && v <= horizon - 0.02 && (u - 0.47).abs() < 0.07 {
        c = [0.92, 0.9, 0.85];
    }
    c
}

fn hills(u: f64, v: f64) -> [f64; 3] {
    let ridge_far = 0.4 + 0.12 * fbm(21, u, 0.0, 0.35, 4);
    let ridge_near = 0.6 + 0.15 * fbm(22, u, 0.5, 0.25, 4);
    let grass = fbm(23, u, v, 0.05, 5);
    if v < ridge_far {
        mix([0.45, 0.6, 0.85], [0.85, 0.75, 0.6], v / ridge_far)
    } else if v < ridge_near {
        scale([0.35, 0.45, 0.55], 0.8 + 0.4 * grass)
    } else {
        let shade = 0.75 + 0.5 * grass;
        scale(
            mix([0.35, 0.6, 0.2], [0.55, 0.5, 0.2], fbm(24, u, v, 0.3, 2)),
            shade,
        )
    }
}

fn city(u: f64, v: f64) -> [f64; 3] {
    let col = (u * 9.0).floor();
    let roof = 0.2 + 0.45 * lattice(31, col as i64, 0);
    if v < roof {
        return mix([0.3, 0.4, 0.7], [0.8, 0.6, 0.5], v / roof);
    }
    let tone = 0.35 + 0.4 * lattice(32, col as i64, 1);
    let base = [tone, tone * 0.95, tone * 0.9];
    let (wx, wy) = ((u * 9.0).fract(), ((v - roof) * 24.0).fract());
    let window = wx > 0.2 && wx < 0.45 && wy > 0.3 && wy < 0.75;
    let lit = lattice(33, (u * 36.0) as i64, (v * 24.0) as i64) > 0.5;
    if window {
        if lit {
            [0.95, 0.85, 0.5]
        } else {
            [0.15, 0.17, 0.2]
        }
    } else {
        scale(base, 0.9 + 0.2 * fbm(34, u, v, 0.02, 2))
    }
}

fn still_life(u: f64, v: f64) -> [f64; 3] {
    let table = v > 0.65;
    let mut c = if table {
        let grain = (60.0 * v + 8.0 * fbm(41, u, v, 0.1, 3)).sin();
        scale([0.55, 0.35, 0.2], 0.85 + 0.15 * grain)
    } else {
        mix([0.85, 0.82, 0.75], [0.6, 0.58, 0.55], u)
    };
    let spheres = [
        (0.3, 0.55, 0.15, [0.85, 0.2, 0.15]),
        (0.62, 0.5, 0.2, [0.3, 0.65, 0.25]),
        (0.82, 0.6, 0.1, [0.95, 0.8, 0.2]),
    ];
    for (cx, cy, r, albedo) in spheres {
        let (dx, dy) = ((u - cx) / r, (v - cy) / r);
        let d2 = dx * dx + dy * dy;
        if d2 < 1.0 {
            let nz = (1.0 - d2).sqrt();
            let lambert = (-0.5 * dx - 0.6 * dy + 0.62 * nz).max(0.0);
            let spec = lambert.powi(20);
            c = mix(scale(albedo, 0.2 + 0.8 * lambert), [1.0; 3], spec);
        }
    }
    c
}

fn foliage(u: f64, v: f64) -> [f64; 3] {
    let leaves = fbm(51, u, v, 0.08, 5);
    let veins = (0.5 + 0.5 * (30.0 * (u + 0.3 * v) + 10.0 * leaves).sin()).powi(3);
    let base = mix([0.1, 0.35, 0.08], [0.55, 0.75, 0.2], leaves);
    let flower = fbm(52, u, v, 0.15, 2) > 0.68;
    if flower {
        mix([0.9, 0.4, 0.6], [1.0, 0.9, 0.9], veins)
    } else {
        scale(base, 0.7 + 0.4 * veins)
    }
}

fn fabric(u: f64, v: f64) -> [f64; 3] {
    let stripe = ((u * 8.0 + 0.3 * (v * 6.0).sin()).floor() as i64).rem_euclid(3);
    let palette = [[0.75, 0.2, 0.25], [0.9, 0.85, 0.7], [0.2, 0.3, 0.6]];
    let weave = 0.9 + 0.1 * (120.0 * u).sin() * (120.0 * v).sin();
    let fold = 0.65 + 0.35 * (0.5 + 0.5 * (5.0 * v + 2.0 * u).sin());
    scale(palette[stripe as usize], weave * fold)
}
