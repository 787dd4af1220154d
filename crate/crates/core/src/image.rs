//! Image containers and color-space conversion.
//!
//! All intensities are stored as `f64` in row-major order. [`RgbImage`]
//! clamps every channel into `[0, 1]` on construction; [`ScalarField`] is an
//! unconstrained real field used for illumination maps, gradients, gamma maps
//! and reflection channels.

use crate::error::{Error, Result};

/// Boundary extension used by every neighbourhood operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    /// Out-of-range indices read the nearest border pixel.
    #[default]
    Replicate,
}

impl BoundaryRule {
    #[inline]
    pub(crate) fn index(self, i: isize, len: usize) -> usize {
        match self {
            BoundaryRule::Replicate => i.clamp(0, len as isize - 1) as usize,
        }
    }
}

/// An `height × width` field of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height >= 1 && width >= 1, "field dimensions must be positive");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Argument(format!(
                "field dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::Argument(format!(
                "expected {} values for a {height}x{width} field, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height >= 1 && width >= 1, "field dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise combination of two fields of equal size.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_dims(&self, other: &ScalarField) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Sequential inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An `height × width` RGB image with every channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<[f64; 3]>,
}

#[inline]
fn unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

impl RgbImage {
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        assert!(height >= 1 && width >= 1, "image dimensions must be positive");
        Self {
            height,
            width,
            data: vec![rgb.map(unit); height * width],
        }
    }

    /// Builds an image from row-major pixels, clamping each channel into `[0, 1]`.
    pub fn from_pixels(height: usize, width: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::Argument(format!(
                "expected {} pixels for a {height}x{width} image, got {}",
                height * width,
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data: pixels.into_iter().map(|p| p.map(unit)).collect(),
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        assert!(height >= 1 && width >= 1, "image dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x).map(unit));
            }
        }
        Self { height, width, data }
    }

    /// Stacks three channel fields into an image, clamping into `[0, 1]`.
    pub fn from_channels(channels: &[ScalarField; 3]) -> Result<Self> {
        channels[0].ensure_same_dims(&channels[1])?;
        channels[0].ensure_same_dims(&channels[2])?;
        let (r, g, b) = (channels[0].data(), channels[1].data(), channels[2].data());
        let (height, width) = channels[0].dims();
        Ok(Self {
            height,
            width,
            data: (0..height * width)
                .map(|i| [r[i], g[i], b[i]].map(unit))
                .collect(),
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> ScalarField {
        assert!(c < 3);
        ScalarField {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|p| p[c]).collect(),
        }
    }

    pub fn channels(&self) -> [ScalarField; 3] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }

    /// Per-pixel maximum over the color channels.
    pub fn max_channel(&self) -> ScalarField {
        self.reduce(|p| p[0].max(p[1]).max(p[2]))
    }

    /// Per-pixel mean over the color channels.
    pub fn mean_channel(&self) -> ScalarField {
        self.reduce(|p| (p[0] + p[1] + p[2]) / 3.0)
    }

    fn reduce(&self, f: impl Fn(&[f64; 3]) -> f64) -> ScalarField {
        ScalarField {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_same_dims(&self, other: &RgbImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    /// Mean of the per-pixel channel mean.
    pub fn mean_luminance(&self) -> f64 {
        self.mean_channel().mean()
    }
}

/// Hexcone RGB → HSV for a single pixel. Hue is scaled to `[0, 1)`.
pub fn rgb_to_hsv_pixel([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let s = if max > 0.0 { chroma / max } else { 0.0 };
    let h = if chroma <= 0.0 {
        0.0
    } else {
        let sector = if max == r {
            ((g - b) / chroma).rem_euclid(6.0)
        } else if max == g {
            (b - r) / chroma + 2.0
        } else {
            (r - g) / chroma + 4.0
        };
        let h = sector / 6.0;
        if h >= 1.0 {
            0.0
        } else {
            h
        }
    };
    [h, s, max]
}

pub fn hsv_to_rgb_pixel([h, s, v]: [f64; 3]) -> [f64; 3] {
    if s <= 0.0 {
        return [v, v, v];
    }
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u8 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Splits an image into hue, saturation and value fields.
pub fn rgb_to_hsv(image: &RgbImage) -> [ScalarField; 3] {
    let hsv: Vec<[f64; 3]> = image.pixels().iter().map(|&p| rgb_to_hsv_pixel(p)).collect();
    let (height, width) = image.dims();
    [0, 1, 2].map(|c| ScalarField {
        height,
        width,
        data: hsv.iter().map(|p| p[c]).collect(),
    })
}

pub fn hsv_to_rgb(h: &ScalarField, s: &ScalarField, v: &ScalarField) -> Result<RgbImage> {
    h.ensure_same_dims(s)?;
    h.ensure_same_dims(v)?;
    let pixels = (0..h.len())
        .map(|i| hsv_to_rgb_pixel([h.data()[i], s.data()[i], v.data()[i]]))
        .collect();
    RgbImage::from_pixels(h.height(), h.width(), pixels)
}
