//! Discrete differential and smoothing operators on [`ScalarField`]s.

use crate::error::{Error, Result};
use crate::image::{BoundaryRule, ScalarField};

/// Direction of a first-order difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along a row (towards increasing column index).
    Horizontal,
    /// Along a column (towards increasing row index).
    Vertical,
}

/// Forward difference `f(x + e) - f(x)`.
///
/// Under replicate extension the difference across the trailing border is
/// zero, so the last column (horizontal) or last row (vertical) is 0.
pub fn gradient(f: &ScalarField, axis: Axis, rule: BoundaryRule) -> ScalarField {
    let (h, w) = f.dims();
    let mut out = ScalarField::zeros(h, w);
    let src = f.data();
    let dst = out.data_mut();
    match axis {
        Axis::Horizontal => {
            for y in 0..h {
                let row = y * w;
                for x in 0..w {
                    let next = rule.index(x as isize + 1, w);
                    dst[row + x] = src[row + next] - src[row + x];
                }
            }
        }
        Axis::Vertical => {
            for y in 0..h {
                let next = rule.index(y as isize + 1, h) * w;
                let row = y * w;
                for x in 0..w {
                    dst[row + x] = src[next + x] - src[row + x];
                }
            }
        }
    }
    out
}

/// Exact adjoint of [`gradient`]: `<gradient(f), g> = <f, gradient_transpose(g)>`.
pub fn gradient_transpose(g: &ScalarField, axis: Axis, rule: BoundaryRule) -> ScalarField {
    let BoundaryRule::Replicate = rule;
    let (h, w) = g.dims();
    let mut out = ScalarField::zeros(h, w);
    let src = g.data();
    let dst = out.data_mut();
    match axis {
        Axis::Horizontal => {
            for y in 0..h {
                let row = y * w;
                for x in 0..w {
                    let mut v = 0.0;
                    if x > 0 {
                        v += src[row + x - 1];
                    }
                    if x + 1 < w {
                        v -= src[row + x];
                    }
                    dst[row + x] = v;
                }
            }
        }
        Axis::Vertical => {
            for y in 0..h {
                let row = y * w;
                for x in 0..w {
                    let mut v = 0.0;
                    if y > 0 {
                        v += src[row - w + x];
                    }
                    if y + 1 < h {
                        v -= src[row + x];
                    }
                    dst[row + x] = v;
                }
            }
        }
    }
    out
}

/// Normalized 1-D Gaussian taps over `[-ceil(3σ), ceil(3σ)]`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    Ok(taps)
}

/// Separable Gaussian smoothing.
pub fn gaussian_convolve(f: &ScalarField, sigma: f64, rule: BoundaryRule) -> Result<ScalarField> {
    let taps = gaussian_kernel(sigma)?;
    Ok(separable(f, &taps, rule))
}

pub(crate) fn separable(f: &ScalarField, taps: &[f64], rule: BoundaryRule) -> ScalarField {
    let (h, w) = f.dims();
    let radius = (taps.len() / 2) as isize;
    let src = f.data();

    let mut tmp = ScalarField::zeros(h, w);
    {
        let dst = tmp.data_mut();
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for x in 0..w {
                let start = x as isize - radius;
                let acc = if start >= 0 && start as usize + taps.len() <= w {
                    let window = &row[start as usize..start as usize + taps.len()];
                    taps.iter().zip(window).map(|(t, v)| t * v).sum()
                } else {
                    taps.iter()
                        .enumerate()
                        .map(|(k, &t)| t * row[rule.index(start + k as isize, w)])
                        .sum()
                };
                dst[y * w + x] = acc;
            }
        }
    }

    let mut out = ScalarField::zeros(h, w);
    {
        let mid = tmp.data();
        let dst = out.data_mut();
        for y in 0..h {
            for (k, &t) in taps.iter().enumerate() {
                let sy = rule.index(y as isize + k as isize - radius, h) * w;
                let src_row = &mid[sy..sy + w];
                let dst_row = &mut dst[y * w..(y + 1) * w];
                for (d, s) in dst_row.iter_mut().zip(src_row) {
                    *d += t * s;
                }
            }
        }
    }
    out
}

/// Mean over the `(2r+1)²` window with replicate padding, using running sums.
pub fn box_mean(f: &ScalarField, radius: usize, rule: BoundaryRule) -> ScalarField {
    if radius == 0 {
        return f.clone();
    }
    let (h, w) = f.dims();
    let r = radius as isize;
    let norm = 1.0 / (2 * radius + 1) as f64;

    let mut tmp = ScalarField::zeros(h, w);
    {
        let src = f.data();
        let dst = tmp.data_mut();
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            let mut acc: f64 = (-r..=r).map(|k| row[rule.index(k, w)]).sum();
            for x in 0..w {
                dst[y * w + x] = acc * norm;
                let xi = x as isize;
                acc += row[rule.index(xi + r + 1, w)] - row[rule.index(xi - r, w)];
            }
        }
    }

    let mut out = ScalarField::zeros(h, w);
    {
        let src = tmp.data();
        let dst = out.data_mut();
        let mut acc = vec![0.0; w];
        for k in -r..=r {
            let sy = rule.index(k, h) * w;
            for (a, s) in acc.iter_mut().zip(&src[sy..sy + w]) {
                *a += s;
            }
        }
        for y in 0..h {
            for x in 0..w {
                dst[y * w + x] = acc[x] * norm;
            }
            let yi = y as isize;
            let add = rule.index(yi + r + 1, h) * w;
            let sub = rule.index(yi - r, h) * w;
            for x in 0..w {
                acc[x] += src[add + x] - src[sub + x];
            }
        }
    }
    out
}
