//! Brute-force reference implementations, written directly from the model
//! definitions and sharing no code with the library beyond its data types.

#![allow(dead_code)]

use lowlight_core::{RgbImage, ScalarField};

/// Small deterministic generator for test instances.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn field(&mut self, h: usize, w: usize, lo: f64, hi: f64) -> ScalarField {
        let data = (0..h * w).map(|_| self.range(lo, hi)).collect();
        ScalarField::from_vec(h, w, data).unwrap()
    }

    pub fn image(&mut self, h: usize, w: usize) -> RgbImage {
        RgbImage::from_fn(h, w, |_, _| [self.unit(), self.unit(), self.unit()])
    }
}

pub type Grid = Vec<Vec<f64>>;

pub fn grid(f: &ScalarField) -> Grid {
    (0..f.height())
        .map(|y| (0..f.width()).map(|x| f.get(y, x)).collect())
        .collect()
}

fn clampi(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Forward differences, zero on the last column.
pub fn grad_h(f: &Grid) -> Grid {
    let w = f[0].len();
    f.iter()
        .map(|row| {
            (0..w)
                .map(|x| if x + 1 < w { row[x + 1] - row[x] } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Forward differences, zero on the last row.
pub fn grad_v(f: &Grid) -> Grid {
    let h = f.len();
    (0..h)
        .map(|y| {
            (0..f[0].len())
                .map(|x| if y + 1 < h { f[y + 1][x] - f[y][x] } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Direct 2-D Gaussian convolution over a `(2r+1)²` window, `r = ceil(3σ)`,
/// weights normalized over the window, replicate boundary.
pub fn gauss2d(f: &Grid, sigma: f64) -> Grid {
    let (h, w) = (f.len(), f[0].len());
    let r = (3.0 * sigma).ceil() as isize;
    let mut norm = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            norm += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
        }
    }
    let mut out = vec![vec![0.0; w]; h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let g = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp() / norm;
                    acc += g * f[clampi(y as isize + dy, h)][clampi(x as isize + dx, w)];
                }
            }
            out[y][x] = acc;
        }
    }
    out
}

fn map(f: &Grid, op: impl Fn(f64) -> f64) -> Grid {
    f.iter().map(|r| r.iter().map(|&v| op(v)).collect()).collect()
}

/// Σ_x D_h/(L_h+ε) + D_v/(L_v+ε).
pub fn rtv_sum(l: &Grid, sigma: f64, eps: f64) -> f64 {
    let mut total = 0.0;
    for g in [grad_h(l), grad_v(l)] {
        let d = gauss2d(&map(&g, f64::abs), sigma);
        let lw = gauss2d(&g, sigma);
        for y in 0..l.len() {
            for x in 0..l[0].len() {
                total += d[y][x] / (lw[y][x].abs() + eps);
            }
        }
    }
    total
}

pub struct ObjectiveTerms {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma: f64,
    pub eps: f64,
}

/// ½‖L−L̃‖² + λ₁(‖U_h‖₀+‖U_v‖₀) + λ₂ΣR + β₁/2‖U_h−∇_hL‖² + β₂/2‖U_v−∇_vL‖².
pub fn objective(l: &Grid, target: &Grid, uh: &Grid, uv: &Grid, t: &ObjectiveTerms) -> f64 {
    let (gh, gv) = (grad_h(l), grad_v(l));
    let mut fid = 0.0;
    let mut nnz = 0usize;
    let mut ch = 0.0;
    let mut cv = 0.0;
    for y in 0..l.len() {
        for x in 0..l[0].len() {
            fid += 0.5 * (l[y][x] - target[y][x]).powi(2);
            nnz += (uh[y][x] != 0.0) as usize + (uv[y][x] != 0.0) as usize;
            ch += (uh[y][x] - gh[y][x]).powi(2);
            cv += (uv[y][x] - gv[y][x]).powi(2);
        }
    }
    fid + t.lambda1 * nnz as f64
        + t.lambda2 * rtv_sum(l, t.sigma, t.eps)
        + 0.5 * t.beta1 * ch
        + 0.5 * t.beta2 * cv
}

/// `(w_h, w_v)` with `w = (G⊛|G⊛∇L| + ε)⁻¹ · (|∇L| + eps_s)⁻¹`.
pub fn rtv_weights(l: &Grid, sigma: f64, eps: f64, eps_s: f64) -> (Grid, Grid) {
    let weights = |g: Grid| -> Grid {
        let outer = gauss2d(&map(&gauss2d(&g, sigma), f64::abs), sigma);
        let mut w = g.clone();
        for y in 0..g.len() {
            for x in 0..g[0].len() {
                w[y][x] = 1.0 / (outer[y][x] + eps) / (g[y][x].abs() + eps_s);
            }
        }
        w
    };
    (weights(grad_h(l)), weights(grad_v(l)))
}

pub type Matrix = Vec<Vec<f64>>;

/// Dense forward-difference matrices `(D_h, D_v)` on row-major `h × w`.
pub fn difference_matrices(h: usize, w: usize) -> (Matrix, Matrix) {
    let n = h * w;
    let mut dh = vec![vec![0.0; n]; n];
    let mut dv = vec![vec![0.0; n]; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                dh[i][i] = -1.0;
                dh[i][i + 1] = 1.0;
            }
            if y + 1 < h {
                dv[i][i] = -1.0;
                dv[i][i + w] = 1.0;
            }
        }
    }
    (dh, dv)
}

/// `I + λ̄ D_hᵀ W_h D_h + λ̄ D_vᵀ W_v D_v`, assembled entry by entry.
pub fn assemble_system(wh: &Grid, wv: &Grid, lambda_bar: f64) -> Matrix {
    let (h, w) = (wh.len(), wh[0].len());
    let n = h * w;
    let (dh, dv) = difference_matrices(h, w);
    let flat = |g: &Grid| -> Vec<f64> { g.iter().flatten().copied().collect() };
    let (fwh, fwv) = (flat(wh), flat(wv));
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
    }
    for (d, wts) in [(&dh, &fwh), (&dv, &fwv)] {
        for k in 0..n {
            for i in 0..n {
                if d[k][i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[i][j] += lambda_bar * d[k][i] * wts[k] * d[k][j];
                }
            }
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Matrix, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn mat_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Guided filter evaluated window by window.
pub fn guided_filter(p: &Grid, guide: &Grid, r: usize, eps: f64) -> Grid {
    let (h, w) = (p.len(), p[0].len());
    let r = r as isize;
    let window = |y: usize, x: usize| {
        let mut cells = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                cells.push((clampi(y as isize + dy, h), clampi(x as isize + dx, w)));
            }
        }
        cells
    };
    let mut a = vec![vec![0.0; w]; h];
    let mut b = vec![vec![0.0; w]; h];
    for y in 0..h {
        for x in 0..w {
            let cells = window(y, x);
            let n = cells.len() as f64;
            let mi = cells.iter().map(|&(i, j)| guide[i][j]).sum::<f64>() / n;
            let mp = cells.iter().map(|&(i, j)| p[i][j]).sum::<f64>() / n;
            let var = cells
                .iter()
                .map(|&(i, j)| (guide[i][j] - mi).powi(2))
                .sum::<f64>()
                / n;
            let cov = cells
                .iter()
                .map(|&(i, j)| (guide[i][j] - mi) * (p[i][j] - mp))
                .sum::<f64>()
                / n;
            a[y][x] = cov / (var + eps);
            b[y][x] = mp - a[y][x] * mi;
        }
    }
    let mut q = vec![vec![0.0; w]; h];
    for y in 0..h {
        for x in 0..w {
            let cells = window(y, x);
            let n = cells.len() as f64;
            let ma = cells.iter().map(|&(i, j)| a[i][j]).sum::<f64>() / n;
            let mb = cells.iter().map(|&(i, j)| b[i][j]).sum::<f64>() / n;
            q[y][x] = ma * guide[y][x] + mb;
        }
    }
    q
}

/// Mean SSIM of channel-mean luminance with an 11×11 σ=1.5 Gaussian window.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> f64 {
    let (h, w) = a.dims();
    let lum = |img: &RgbImage| -> Grid {
        (0..h)
            .map(|y| (0..w).map(|x| img.get(y, x).iter().sum::<f64>() / 3.0).collect())
            .collect()
    };
    let (la, lb) = (lum(a), lum(b));
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let sigma = 1.5f64;
    let r = 5isize;
    let mut norm = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            norm += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
        }
    }
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let g = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp() / norm;
                    let (i, j) = (clampi(y as isize + dy, h), clampi(x as isize + dx, w));
                    let (p, q) = (la[i][j], lb[i][j]);
                    mx += g * p;
                    my += g * q;
                    sxx += g * p * p;
                    syy += g * q * q;
                    sxy += g * p * q;
                }
            }
            let (vx, vy, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    total / (h * w) as f64
}

/// Lightness-order error: channel-max lightness, nearest-neighbour sampling at
/// pixel centres down to a longer side of at most 100, then all ordered pairs.
pub fn loe(enhanced: &RgbImage, reference: &RgbImage) -> f64 {
    let (h, w) = enhanced.dims();
    let longest = h.max(w);
    let (nh, nw) = if longest > 100 {
        ((h * 100 / longest).max(1), (w * 100 / longest).max(1))
    } else {
        (h, w)
    };
    let sample = |img: &RgbImage| -> Vec<f64> {
        let mut out = Vec::new();
        for y in 0..nh {
            for x in 0..nw {
                let sy = ((y as f64 + 0.5) * h as f64 / nh as f64).floor() as usize;
                let sx = ((x as f64 + 0.5) * w as f64 / nw as f64).floor() as usize;
                let p = img.get(sy.min(h - 1), sx.min(w - 1));
                out.push(p[0].max(p[1]).max(p[2]));
            }
        }
        out
    };
    let (e, r) = (sample(enhanced), sample(reference));
    let mut count = 0u64;
    for i in 0..e.len() {
        for j in 0..e.len() {
            let ue = e[i] >= e[j];
            let ur = r[i] >= r[j];
            count += (ue != ur) as u64;
        }
    }
    count as f64 / e.len() as f64
}
