//! Jacobi-preconditioned conjugate gradient for symmetric positive-definite systems.

use crate::error::{Error, Result};

/// A symmetric positive-definite operator acting on flat vectors.
pub trait SpdOperator {
    fn dim(&self) -> usize;

    /// `out = A x`
    fn apply(&self, x: &[f64], out: &mut [f64]);

    /// Main diagonal of `A`, used as the preconditioner.
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub max_iters: usize,
    /// Stop once `‖r‖₂ ≤ tolerance · ‖b‖₂`.
    pub tolerance: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final `‖r‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `x`. Reductions run in index order, so the
/// result is bit-reproducible.
pub fn conjugate_gradient<A: SpdOperator + ?Sized>(
    op: &A,
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgStats> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let inv_diag: Vec<f64> = op.diagonal().into_iter().map(|d| 1.0 / d).collect();
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / b_norm;

    let mut iterations = 0;
    while rel > opts.tolerance {
        if iterations == opts.max_iters {
            return Err(Error::NotConverged {
                iterations,
                residual: rel,
            });
        }
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        let (mut rz_next, mut rr) = (0.0, 0.0);
        for i in 0..n {
            x[i] += alpha * p[i];
            let ri = r[i] - alpha * ap[i];
            let zi = ri * inv_diag[i];
            r[i] = ri;
            z[i] = zi;
            rz_next += ri * zi;
            rr += ri * ri;
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = rr.sqrt() / b_norm;
        iterations += 1;
    }

    Ok(CgStats {
        iterations,
        relative_residual: rel,
    })
}
