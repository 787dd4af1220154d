//! Synthetic low-light degradation: value-channel darkening plus additive
//! white Gaussian noise.
//!
//! Noise is drawn from ChaCha8 used as a counter-based generator: the seed
//! selects the key and the flat pixel index selects the stream, so every pixel
//! owns an independent, platform-stable sequence. Four 64-bit words per pixel
//! feed two Box–Muller transforms; the first three normals perturb R, G, B.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{hsv_to_rgb_pixel, rgb_to_hsv_pixel, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseStage {
    /// Add noise to the clean image, then darken.
    #[default]
    BeforeDarken,
    /// Darken first, then add noise.
    AfterDarken,
}

impl NoiseStage {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseStage::BeforeDarken => "before_darken",
            NoiseStage::AfterDarken => "after_darken",
        }
    }
}

impl FromStr for NoiseStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "before_darken" => Ok(NoiseStage::BeforeDarken),
            "after_darken" => Ok(NoiseStage::AfterDarken),
            other => Err(Error::Argument(format!("unknown noise stage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    /// Value-channel multiplier in `(0, 1]`.
    pub darken: f64,
    /// Noise variance on the 0–255 scale; the unit-scale std is `sqrt(var)/255`.
    pub noise_var: f64,
    pub seed: u64,
    pub noise_stage: NoiseStage,
}

impl Default for DegradeSpec {
    fn default() -> Self {
        Self {
            darken: 0.1,
            noise_var: 25.0,
            seed: 0,
            noise_stage: NoiseStage::BeforeDarken,
        }
    }
}

impl DegradeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.darken > 0.0 && self.darken <= 1.0) {
            return Err(Error::Argument(format!(
                "darken must lie in (0, 1], got {}",
                self.darken
            )));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Argument(format!(
                "noise variance must be non-negative, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }
}

impl fmt::Display for DegradeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "darken={} noise_var={} seed={} noise_stage={}",
            self.darken,
            self.noise_var,
            self.seed,
            self.noise_stage.as_str()
        )
    }
}

/// Scales the HSV value channel by `c`.
pub fn darken(image: &RgbImage, c: f64) -> Result<RgbImage> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Argument(format!(
            "darkening coefficient must lie in (0, 1], got {c}"
        )));
    }
    let pixels = image
        .pixels()
        .iter()
        .map(|&p| {
            let [h, s, v] = rgb_to_hsv_pixel(p);
            hsv_to_rgb_pixel([h, s, c * v])
        })
        .collect();
    RgbImage::from_pixels(image.height(), image.width(), pixels)
}

#[inline]
fn open_unit(word: u64) -> f64 {
    // (0, 1]
    ((word >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

#[inline]
fn half_open_unit(word: u64) -> f64 {
    // [0, 1)
    (word >> 11) as f64 / (1u64 << 53) as f64
}

/// Three standard normals for pixel `index` under `key`.
fn pixel_normals(key: &ChaCha8Rng, index: u64) -> [f64; 3] {
    let mut rng = key.clone();
    rng.set_stream(index);
    rng.set_word_pos(0);
    let w: [u64; 4] = std::array::from_fn(|_| rng.next_u64());
    let r0 = (-2.0 * open_unit(w[0]).ln()).sqrt();
    let t0 = TAU * half_open_unit(w[1]);
    let r1 = (-2.0 * open_unit(w[2]).ln()).sqrt();
    let t1 = TAU * half_open_unit(w[3]);
    [r0 * t0.cos(), r0 * t0.sin(), r1 * t1.cos()]
}

/// Adds `N(0, (sqrt(var)/255)²)` per channel and clamps to `[0, 1]`.
pub fn add_gaussian_noise(image: &RgbImage, var: f64, seed: u64) -> Result<RgbImage> {
    if !(var >= 0.0 && var.is_finite()) {
        return Err(Error::Argument(format!(
            "noise variance must be non-negative, got {var}"
        )));
    }
    if var == 0.0 {
        return Ok(image.clone());
    }
    let sd = var.sqrt() / 255.0;
    let key = ChaCha8Rng::seed_from_u64(seed);
    let pixels = image
        .pixels()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = pixel_normals(&key, i as u64);
            [p[0] + sd * n[0], p[1] + sd * n[1], p[2] + sd * n[2]]
        })
        .collect();
    RgbImage::from_pixels(image.height(), image.width(), pixels)
}

/// Applies the degradation described by `spec`.
pub fn synthesize(image: &RgbImage, spec: &DegradeSpec) -> Result<RgbImage> {
    spec.validate()?;
    match spec.noise_stage {
        NoiseStage::BeforeDarken => {
            let noisy = add_gaussian_noise(image, spec.noise_var, spec.seed)?;
            darken(&noisy, spec.darken)
        }
        NoiseStage::AfterDarken => {
            let dark = darken(image, spec.darken)?;
            add_gaussian_noise(&dark, spec.noise_var, spec.seed)
        }
    }
}
