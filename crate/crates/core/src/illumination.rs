//! Illumination estimation.
//!
//! The coarse map is the per-pixel channel maximum. It is refined by
//! minimizing
//!
//! ```text
//! ½‖L − L̃‖² + λ₁(‖U_h‖₀ + ‖U_v‖₀) + λ₂ Σ_x RTV(L)(x)
//!     + β₁/2 ‖U_h − ∇_h L‖² + β₂/2 ‖U_v − ∇_v L‖²
//! ```
//!
//! by alternating a closed-form hard-thresholding update of the auxiliary
//! gradients `U` with one proximal forward-backward step in `L`. The proximal
//! RTV step is solved as an iteratively reweighted quadratic problem.

use crate::error::{Error, Result};
use crate::image::{BoundaryRule, RgbImage, ScalarField};
use crate::ops::{gaussian_convolve, gradient, gradient_transpose, Axis};
use crate::solver::{conjugate_gradient, CgOptions, CgStats, SpdOperator};

const RULE: BoundaryRule = BoundaryRule::Replicate;

/// Tunables of the refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationParams {
    /// L0 weight λ₁.
    pub lambda1: f64,
    /// RTV weight λ₂.
    pub lambda2: f64,
    /// Penalty β₁ coupling `U_h` to `∇_h L`.
    pub beta1: f64,
    /// Penalty β₂ coupling `U_v` to `∇_v L`.
    pub beta2: f64,
    /// Forward-backward step size t.
    pub step: f64,
    /// Spatial scale of the RTV window.
    pub sigma: f64,
    /// ε in the RTV denominator, in unit intensity.
    pub eps_rtv: f64,
    /// Guard in the reweighting `1 / (|∇L| + eps_s)`, in unit intensity.
    pub eps_s: f64,
    pub outer_iters: usize,
    /// Forward-backward steps per outer iteration.
    pub inner_iters: usize,
    /// Stop when `‖L_{k+1} − L_k‖ / ‖L_k‖` falls below this.
    pub tolerance: f64,
    /// Lower clamp ℓ_min applied to the refined map.
    pub floor: f64,
    /// Intensity range the refinement works in. The coarse map is multiplied
    /// by this before optimizing and the result divided by it afterwards, so
    /// λ₁, β and the ε guards are in 8-bit units at the default of 255.
    pub intensity_scale: f64,
    pub cg: CgOptions,
}

impl Default for IlluminationParams {
    fn default() -> Self {
        Self {
            lambda1: 3.0,
            lambda2: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            step: 0.5,
            sigma: 3.0,
            eps_rtv: 1e-3,
            eps_s: 1e-3,
            outer_iters: 4,
            inner_iters: 1,
            tolerance: 1e-3,
            floor: 1e-4,
            intensity_scale: 255.0,
            cg: CgOptions::default(),
        }
    }
}

impl IlluminationParams {
    /// `(eps_rtv, eps_s)` expressed in working units.
    pub fn working_eps(&self) -> (f64, f64) {
        (
            self.eps_rtv * self.intensity_scale,
            self.eps_s * self.intensity_scale,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("step", self.step),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be non-negative, got {v}")));
            }
        }
        let positive = [
            ("sigma", self.sigma),
            ("eps_rtv", self.eps_rtv),
            ("eps_s", self.eps_s),
            ("floor", self.floor),
            ("intensity_scale", self.intensity_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.floor > 1.0 {
            return Err(Error::Argument(format!(
                "floor must be at most 1, got {}",
                self.floor
            )));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::Argument("iteration counts must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Argument(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// A coarse map together with the refinement parameters.
#[derive(Debug, Clone)]
pub struct IlluminationProblem {
    coarse: ScalarField,
    target: ScalarField,
    params: IlluminationParams,
}

impl IlluminationProblem {
    pub fn new(coarse: ScalarField, params: IlluminationParams) -> Result<Self> {
        params.validate()?;
        if coarse.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Argument("coarse illumination must lie in [0, 1]".into()));
        }
        let scale = params.intensity_scale;
        let target = coarse.map(|v| v * scale);
        Ok(Self {
            coarse,
            target,
            params,
        })
    }

    pub fn from_image(image: &RgbImage, params: IlluminationParams) -> Result<Self> {
        Self::new(coarse_illumination(image), params)
    }

    /// The coarse map in unit range.
    pub fn coarse(&self) -> &ScalarField {
        &self.coarse
    }

    /// The coarse map in working units, `L̃` in the objective.
    pub fn target(&self) -> &ScalarField {
        &self.target
    }

    pub fn params(&self) -> &IlluminationParams {
        &self.params
    }
}

/// Per-run record of the refinement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    /// Augmented objective after each outer iteration.
    pub objective_per_iter: Vec<f64>,
    pub converged: bool,
    pub iters_run: usize,
    /// CG iterations used by each proximal solve.
    pub cg_iterations: Vec<usize>,
}

/// Max-RGB estimate `L̃(x) = max_c I^c(x)`.
pub fn coarse_illumination(image: &RgbImage) -> ScalarField {
    image.max_channel()
}

/// `H_{a,b}(s)`: zero when `|s| < sqrt(2a/b)`, otherwise `s`.
#[inline]
pub fn hard_threshold(s: f64, a: f64, b: f64) -> f64 {
    if s.abs() < (2.0 * a / b).sqrt() {
        0.0
    } else {
        s
    }
}

/// Closed-form update of the auxiliary gradients from the current map.
pub fn threshold_gradients(l: &ScalarField, params: &IlluminationParams) -> (ScalarField, ScalarField) {
    let uh = gradient(l, Axis::Horizontal, RULE).map(|s| hard_threshold(s, params.lambda1, params.beta1));
    let uv = gradient(l, Axis::Vertical, RULE).map(|s| hard_threshold(s, params.lambda1, params.beta2));
    (uh, uv)
}

/// Σ_x RTV(L)(x), where each direction contributes `D_*(x) / (L_*(x) + ε)`
/// with `D_* = G_σ ⊛ |∇_* L|` and `L_* = |G_σ ⊛ ∇_* L|`.
pub fn rtv_penalty(l: &ScalarField, sigma: f64, eps_rtv: f64) -> Result<f64> {
    let mut total = 0.0;
    for axis in [Axis::Horizontal, Axis::Vertical] {
        let g = gradient(l, axis, RULE);
        let windowed_total = gaussian_convolve(&g.map(f64::abs), sigma, RULE)?;
        let windowed_inherent = gaussian_convolve(&g, sigma, RULE)?;
        total += windowed_total
            .data()
            .iter()
            .zip(windowed_inherent.data())
            .map(|(d, l)| d / (l.abs() + eps_rtv))
            .sum::<f64>();
    }
    Ok(total)
}

fn count_nonzero(f: &ScalarField) -> usize {
    f.data().iter().filter(|&&v| v != 0.0).count()
}

fn coupling(u: &ScalarField, grad: &ScalarField) -> f64 {
    u.data()
        .iter()
        .zip(grad.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The smooth part `F(L) = ½‖L − L̃‖² + β₁/2‖U_h − ∇_h L‖² + β₂/2‖U_v − ∇_v L‖²`.
pub fn smooth_objective(
    l: &ScalarField,
    prob: &IlluminationProblem,
    uh: &ScalarField,
    uv: &ScalarField,
) -> Result<f64> {
    check_dims(l, prob, uh, uv)?;
    let p = &prob.params;
    let fidelity = 0.5 * coupling(l, &prob.target);
    let gh = gradient(l, Axis::Horizontal, RULE);
    let gv = gradient(l, Axis::Vertical, RULE);
    Ok(fidelity + 0.5 * p.beta1 * coupling(uh, &gh) + 0.5 * p.beta2 * coupling(uv, &gv))
}

/// `∇F(L) = L − L̃ + β₁∇_hᵀ(∇_h L − U_h) + β₂∇_vᵀ(∇_v L − U_v)`.
pub fn smooth_gradient(
    l: &ScalarField,
    prob: &IlluminationProblem,
    uh: &ScalarField,
    uv: &ScalarField,
) -> Result<ScalarField> {
    check_dims(l, prob, uh, uv)?;
    let p = &prob.params;
    let rh = gradient(l, Axis::Horizontal, RULE).zip_map(uh, |g, u| g - u)?;
    let rv = gradient(l, Axis::Vertical, RULE).zip_map(uv, |g, u| g - u)?;
    let th = gradient_transpose(&rh, Axis::Horizontal, RULE);
    let tv = gradient_transpose(&rv, Axis::Vertical, RULE);
    let mut out = l.zip_map(&prob.target, |a, b| a - b)?;
    for (i, o) in out.data_mut().iter_mut().enumerate() {
        *o += p.beta1 * th.data()[i] + p.beta2 * tv.data()[i];
    }
    Ok(out)
}

/// Full augmented objective at `(L, U_h, U_v)`, all in working units.
pub fn objective(
    l: &ScalarField,
    prob: &IlluminationProblem,
    uh: &ScalarField,
    uv: &ScalarField,
) -> Result<f64> {
    let p = &prob.params;
    let smooth = smooth_objective(l, prob, uh, uv)?;
    let sparsity = p.lambda1 * (count_nonzero(uh) + count_nonzero(uv)) as f64;
    let rtv = p.lambda2 * rtv_penalty(l, p.sigma, p.working_eps().0)?;
    Ok(smooth + sparsity + rtv)
}

fn check_dims(l: &ScalarField, prob: &IlluminationProblem, uh: &ScalarField, uv: &ScalarField) -> Result<()> {
    l.ensure_same_dims(&prob.target)?;
    l.ensure_same_dims(uh)?;
    l.ensure_same_dims(uv)
}

/// Per-pixel reweighting of the RTV penalty around `l`:
/// `w_* = u_* · v_*` with `u_* = (G_σ ⊛ |G_σ ⊛ ∇_* l| + ε)⁻¹` and
/// `v_* = (|∇_* l| + eps_s)⁻¹`.
pub fn rtv_weights(
    l: &ScalarField,
    sigma: f64,
    eps_rtv: f64,
    eps_s: f64,
) -> Result<(ScalarField, ScalarField)> {
    let weights = |axis| -> Result<ScalarField> {
        let g = gradient(l, axis, RULE);
        let inherent = gaussian_convolve(&g, sigma, RULE)?;
        let u = gaussian_convolve(&inherent.map(f64::abs), sigma, RULE)?.map(|v| 1.0 / (v + eps_rtv));
        u.zip_map(&g, |u, g| u / (g.abs() + eps_s))
    };
    Ok((weights(Axis::Horizontal)?, weights(Axis::Vertical)?))
}

/// `Id + λ̄ ∇_hᵀ W_h ∇_h + λ̄ ∇_vᵀ W_v ∇_v` on an `height × width` grid.
#[derive(Debug, Clone)]
pub struct RtvSystem {
    height: usize,
    width: usize,
    /// λ̄·W_h, with the trailing column unused.
    wh: Vec<f64>,
    /// λ̄·W_v, with the trailing row unused.
    wv: Vec<f64>,
}

impl RtvSystem {
    pub fn new(wh: &ScalarField, wv: &ScalarField, lambda_bar: f64) -> Result<Self> {
        wh.ensure_same_dims(wv)?;
        let (height, width) = wh.dims();
        Ok(Self {
            height,
            width,
            wh: wh.data().iter().map(|w| lambda_bar * w).collect(),
            wv: wv.data().iter().map(|w| lambda_bar * w).collect(),
        })
    }

    /// Reweighted system linearized around `l_bar`.
    pub fn linearized(l_bar: &ScalarField, lambda_bar: f64, params: &IlluminationParams) -> Result<Self> {
        let (eps_rtv, eps_s) = params.working_eps();
        let (wh, wv) = rtv_weights(l_bar, params.sigma, eps_rtv, eps_s)?;
        Self::new(&wh, &wv, lambda_bar)
    }

    pub fn apply_field(&self, x: &ScalarField) -> ScalarField {
        let mut out = ScalarField::zeros(self.height, self.width);
        self.apply(x.data(), out.data_mut());
        out
    }
}

impl SpdOperator for RtvSystem {
    fn dim(&self) -> usize {
        self.height * self.width
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        out.copy_from_slice(x);
        for y in 0..h {
            let row = y * w;
            for c in 0..w.saturating_sub(1) {
                let i = row + c;
                let flux = self.wh[i] * (x[i + 1] - x[i]);
                out[i] -= flux;
                out[i + 1] += flux;
            }
            if y + 1 < h {
                for i in row..row + w {
                    let flux = self.wv[i] * (x[i + w] - x[i]);
                    out[i] -= flux;
                    out[i + w] += flux;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let mut d = vec![1.0; h * w];
        for y in 0..h {
            for c in 0..w {
                let i = y * w + c;
                if c + 1 < w {
                    d[i] += self.wh[i];
                    d[i + 1] += self.wh[i];
                }
                if y + 1 < h {
                    d[i] += self.wv[i];
                    d[i + w] += self.wv[i];
                }
            }
        }
        d
    }
}

/// One reweighted solve of `min ‖L − L̄‖² + λ̄ Σ RTV(L)`.
pub fn rtv_prox(
    l_bar: &ScalarField,
    lambda_bar: f64,
    params: &IlluminationParams,
) -> Result<(ScalarField, CgStats)> {
    if !(lambda_bar >= 0.0) {
        return Err(Error::Argument(format!(
            "lambda_bar must be non-negative, got {lambda_bar}"
        )));
    }
    if lambda_bar == 0.0 {
        return Ok((
            l_bar.clone(),
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let system = RtvSystem::linearized(l_bar, lambda_bar, params)?;
    let mut x = l_bar.clone();
    let stats = conjugate_gradient(&system, l_bar.data(), x.data_mut(), params.cg)?;
    Ok((x, stats))
}

/// Gradient step on `F` followed by the RTV proximal step with `λ̄ = 2tλ₂`.
pub fn pfbs_step(
    l: &ScalarField,
    prob: &IlluminationProblem,
    uh: &ScalarField,
    uv: &ScalarField,
) -> Result<(ScalarField, CgStats)> {
    let t = prob.params.step;
    let grad = smooth_gradient(l, prob, uh, uv)?;
    let l_bar = l.zip_map(&grad, |v, g| v - t * g)?;
    rtv_prox(&l_bar, 2.0 * t * prob.params.lambda2, &prob.params)
}

/// Two-step refinement of the coarse map. Iterates live in working units;
/// the result is returned in unit range, clamped to `[floor, 1]`.
pub fn refine_illumination(prob: &IlluminationProblem) -> Result<(ScalarField, SolverTrace)> {
    let p = &prob.params;
    let mut l = prob.target.clone();
    let mut trace = SolverTrace::default();

    for _ in 0..p.outer_iters {
        let (uh, uv) = threshold_gradients(&l, p);
        let mut next = l.clone();
        for _ in 0..p.inner_iters {
            let (stepped, stats) = pfbs_step(&next, prob, &uh, &uv)?;
            trace.cg_iterations.push(stats.iterations);
            next = stepped;
        }
        trace.objective_per_iter.push(objective(&next, prob, &uh, &uv)?);
        trace.iters_run += 1;

        let change = next.zip_map(&l, |a, b| a - b)?.norm();
        let base = l.norm();
        l = next;
        let relative = if base > 0.0 { change / base } else { change };
        if relative < p.tolerance {
            trace.converged = true;
            break;
        }
    }

    let scale = p.intensity_scale;
    Ok((l.map(|v| v / scale).clamp(p.floor, 1.0), trace))
}
