//! Full-reference quality metrics.

use crate::error::Result;
use crate::image::{BoundaryRule, RgbImage, ScalarField};
use crate::ops::gaussian_convolve;

/// Reported PSNR for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Longer side of the lightness maps compared by [`loe`].
pub const LOE_MAX_SIDE: usize = 100;

/// Mean squared error over all pixels and channels.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>())
        .sum();
    Ok(sum / (3 * a.pixels().len()) as f64)
}

/// `10·log10(1 / MSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / err).log10()).min(PSNR_CAP_DB))
}

/// Per-pixel SSIM map on the channel-mean luminance.
pub fn ssim_map(a: &RgbImage, b: &RgbImage) -> Result<ScalarField> {
    a.ensure_same_dims(b)?;
    let rule = BoundaryRule::Replicate;
    let x = a.mean_channel();
    let y = b.mean_channel();
    let mu_x = gaussian_convolve(&x, SSIM_SIGMA, rule)?;
    let mu_y = gaussian_convolve(&y, SSIM_SIGMA, rule)?;
    let xx = gaussian_convolve(&x.map(|v| v * v), SSIM_SIGMA, rule)?;
    let yy = gaussian_convolve(&y.map(|v| v * v), SSIM_SIGMA, rule)?;
    let xy = gaussian_convolve(&x.zip_map(&y, |p, q| p * q)?, SSIM_SIGMA, rule)?;

    let mut out = ScalarField::zeros(x.height(), x.width());
    for i in 0..out.len() {
        let (mx, my) = (mu_x.data()[i], mu_y.data()[i]);
        let vx = xx.data()[i] - mx * mx;
        let vy = yy.data()[i] - my * my;
        let cov = xy.data()[i] - mx * my;
        out.data_mut()[i] = ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(out)
}

/// Mean SSIM with an 11×11 Gaussian window (σ = 1.5).
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    Ok(ssim_map(a, b)?.mean())
}

/// Nearest-neighbour resampling so the longer side is at most `max_side`.
pub fn downsample_nearest(f: &ScalarField, max_side: usize) -> ScalarField {
    let (h, w) = f.dims();
    let longest = h.max(w);
    if longest <= max_side {
        return f.clone();
    }
    let nh = (h * max_side / longest).max(1);
    let nw = (w * max_side / longest).max(1);
    ScalarField::from_fn(nh, nw, |y, x| {
        let sy = ((2 * y + 1) * h / (2 * nh)).min(h - 1);
        let sx = ((2 * x + 1) * w / (2 * nw)).min(w - 1);
        f.get(sy, sx)
    })
}

/// Number of ordered pixel pairs whose lightness order differs.
pub fn order_flips(enhanced: &ScalarField, reference: &ScalarField) -> Result<u64> {
    enhanced.ensure_same_dims(reference)?;
    let e = enhanced.data();
    let r = reference.data();
    let mut flips = 0u64;
    for i in 0..e.len() {
        let (ei, ri) = (e[i], r[i]);
        flips += e
            .iter()
            .zip(r)
            .filter(|(&ej, &rj)| (ei >= ej) != (ri >= rj))
            .count() as u64;
    }
    Ok(flips)
}

/// Lightness-order error without downsampling.
pub fn loe_exact(enhanced: &RgbImage, reference: &RgbImage) -> Result<f64> {
    enhanced.ensure_same_dims(reference)?;
    let flips = order_flips(&enhanced.max_channel(), &reference.max_channel())?;
    Ok(flips as f64 / enhanced.pixels().len() as f64)
}

/// Lightness-order error on lightness maps downsampled to at most
/// [`LOE_MAX_SIDE`] on the longer side.
pub fn loe(enhanced: &RgbImage, reference: &RgbImage) -> Result<f64> {
    enhanced.ensure_same_dims(reference)?;
    let e = downsample_nearest(&enhanced.max_channel(), LOE_MAX_SIDE);
    let r = downsample_nearest(&reference.max_channel(), LOE_MAX_SIDE);
    Ok(order_flips(&e, &r)? as f64 / e.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        let a = RgbImage::from_fn(8, 8, |y, x| [0.05 * x as f64, 0.05 * y as f64, 0.3]);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);

        let b = RgbImage::from_fn(8, 8, |y, x| [0.05 * x as f64 + 0.1, 0.05 * y as f64 + 0.1, 0.4]);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());

        let check = RgbImage::from_fn(4, 4, |y, x| [((x + y) % 2) as f64; 3]);
        let inv = RgbImage::from_fn(4, 4, |y, x| [((x + y + 1) % 2) as f64; 3]);
        assert_eq!(psnr(&check, &inv).unwrap(), 0.0);

        assert!(psnr(&a, &RgbImage::filled(4, 8, [0.0; 3])).is_err());
    }

    #[test]
    fn ssim_examples() {
        let a = RgbImage::from_fn(16, 16, |y, x| [((x * 3 + y) % 7) as f64 / 7.0, 0.2, 0.5]);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);

        let c = RgbImage::filled(16, 16, [0.5; 3]);
        let d = RgbImage::filled(16, 16, [0.6; 3]);
        let expected = (2.0 * 0.5 * 0.6 + SSIM_C1) / (0.25 + 0.36 + SSIM_C1);
        assert!((ssim(&c, &d).unwrap() - expected).abs() < 1e-12);
        assert!(ssim(&c, &RgbImage::filled(3, 3, [0.5; 3])).is_err());
    }

    #[test]
    fn loe_examples() {
        let reference = RgbImage::from_fn(4, 4, |y, x| [(y * 4 + x) as f64 / 20.0 + 0.1; 3]);
        assert_eq!(loe(&reference, &reference).unwrap(), 0.0);

        let reversed = RgbImage::from_fn(4, 4, |y, x| [1.0 - reference.get(y, x)[0]; 3]);
        assert_eq!(loe_exact(&reversed, &reference).unwrap(), 15.0);

        let squared = RgbImage::from_fn(4, 4, |y, x| [reference.get(y, x)[0].powi(2); 3]);
        assert_eq!(loe_exact(&squared, &reference).unwrap(), 0.0);
    }

    #[test]
    fn downsample_caps_longer_side() {
        let f = ScalarField::from_fn(150, 400, |y, x| (y * 400 + x) as f64);
        let d = downsample_nearest(&f, 100);
        assert_eq!(d.dims(), (37, 100));
        let small = ScalarField::zeros(20, 30);
        assert_eq!(downsample_nearest(&small, 100), small);
    }
}
