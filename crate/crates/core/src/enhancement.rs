//! Illumination adjustment, reflection detail boosting and recombination.

use crate::config::{DenoiseMode, EnhanceConfig};
use crate::error::{Error, Result};
use crate::illumination::{IlluminationProblem, SolverTrace};
use crate::image::{BoundaryRule, RgbImage, ScalarField};
use crate::ops::box_mean;

const RULE: BoundaryRule = BoundaryRule::Replicate;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaConfig {
    /// Base exponent γ₀ (> 1).
    pub gamma0: f64,
    /// Radius of the window for the local illumination mean.
    pub local_radius: usize,
    /// Lower clamp for the local mean.
    pub floor: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            gamma0: 1.429,
            local_radius: 7,
            floor: 1e-4,
        }
    }
}

impl GammaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 1.0 && self.gamma0.is_finite()) {
            return Err(Error::Argument(format!(
                "gamma0 must exceed 1, got {}",
                self.gamma0
            )));
        }
        if !(self.floor > 0.0 && self.floor <= 1.0) {
            return Err(Error::Argument(format!(
                "floor must lie in (0, 1], got {}",
                self.floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    /// Detail gain κ.
    pub kappa: f64,
    pub guide_radius: usize,
    pub guide_eps: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            kappa: 1.3,
            guide_radius: 15,
            guide_eps: 1e-5,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Argument(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.guide_eps > 0.0 && self.guide_eps.is_finite()) {
            return Err(Error::Argument(format!(
                "guide_eps must be positive, got {}",
                self.guide_eps
            )));
        }
        Ok(())
    }
}

/// Spatially varying exponent:
/// `γ(x) = γ₀·ln μ(x) / ln 0.5` where the local mean `μ(x) ≤ 0.5`, else `γ₀`.
pub fn adaptive_gamma_map(l: &ScalarField, cfg: &GammaConfig) -> ScalarField {
    let ln_half = 0.5f64.ln();
    box_mean(l, cfg.local_radius, RULE).map(|mu| {
        let mu = mu.clamp(cfg.floor, 1.0);
        if mu <= 0.5 {
            cfg.gamma0 * mu.ln() / ln_half
        } else {
            cfg.gamma0
        }
    })
}

/// `L_G(x) = L(x)^(1/γ(x))`.
pub fn adjust_illumination(l: &ScalarField, gamma: &ScalarField) -> Result<ScalarField> {
    l.zip_map(gamma, |v, g| v.powf(1.0 / g))
}

/// Gray-guide guided filter with box windows of the given radius.
pub fn guided_filter(p: &ScalarField, guide: &ScalarField, radius: usize, eps: f64) -> Result<ScalarField> {
    p.ensure_same_dims(guide)?;
    let mean_g = box_mean(guide, radius, RULE);
    let mean_p = box_mean(p, radius, RULE);
    let mean_gp = box_mean(&guide.zip_map(p, |g, p| g * p)?, radius, RULE);
    let mean_gg = box_mean(&guide.map(|g| g * g), radius, RULE);

    let n = p.len();
    let mut a = ScalarField::zeros(p.height(), p.width());
    let mut b = ScalarField::zeros(p.height(), p.width());
    for i in 0..n {
        let mg = mean_g.data()[i];
        let mp = mean_p.data()[i];
        let var = mean_gg.data()[i] - mg * mg;
        let cov = mean_gp.data()[i] - mg * mp;
        let ai = cov / (var + eps);
        a.data_mut()[i] = ai;
        b.data_mut()[i] = mp - ai * mg;
    }

    let mean_a = box_mean(&a, radius, RULE);
    let mean_b = box_mean(&b, radius, RULE);
    let mut out = ScalarField::zeros(p.height(), p.width());
    for i in 0..n {
        out.data_mut()[i] = mean_a.data()[i] * guide.data()[i] + mean_b.data()[i];
    }
    Ok(out)
}

/// Base/detail split of each reflection channel followed by `B + κ·(R − B)`.
pub fn detail_boost(
    reflection: &[ScalarField; 3],
    guide: &RgbImage,
    cfg: &BoostConfig,
) -> Result<[ScalarField; 3]> {
    let gray = guide.max_channel();
    let boost = |r: &ScalarField| -> Result<ScalarField> {
        let base = guided_filter(r, &gray, cfg.guide_radius, cfg.guide_eps)?;
        r.zip_map(&base, |r, b| b + cfg.kappa * (r - b))
    };
    Ok([
        boost(&reflection[0])?,
        boost(&reflection[1])?,
        boost(&reflection[2])?,
    ])
}

/// External noise remover hooked into the pipeline.
pub trait Denoiser: Sync {
    fn denoise(&self, image: &RgbImage) -> Result<RgbImage>;
}

/// Everything computed on the way to the enhanced image.
#[derive(Debug, Clone)]
pub struct Intermediates {
    pub coarse: ScalarField,
    pub refined: ScalarField,
    pub gamma: ScalarField,
    pub adjusted: ScalarField,
    pub reflection: [ScalarField; 3],
    pub boosted: [ScalarField; 3],
    pub trace: SolverTrace,
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub image: RgbImage,
    pub intermediates: Intermediates,
}

/// Classical pipeline with no denoising.
pub fn enhance(image: &RgbImage, cfg: &EnhanceConfig) -> Result<Enhanced> {
    enhance_with(image, cfg, None)
}

/// Full pipeline. When a denoiser is supplied it runs at the stage chosen by
/// `cfg.denoise_mode`.
pub fn enhance_with(
    image: &RgbImage,
    cfg: &EnhanceConfig,
    denoiser: Option<&dyn Denoiser>,
) -> Result<Enhanced> {
    cfg.validate()?;
    let active = denoiser.filter(|_| cfg.denoise_mode != DenoiseMode::None);
    let run = |stage: &'static str, img: &RgbImage| -> Result<RgbImage> {
        let out = active
            .expect("denoiser checked by caller")
            .denoise(img)
            .map_err(|e| match e {
                Error::Denoiser { reason, .. } => Error::Denoiser { stage, reason },
                other => Error::Denoiser {
                    stage,
                    reason: other.to_string(),
                },
            })?;
        img.ensure_same_dims(&out).map_err(|e| Error::Denoiser {
            stage,
            reason: e.to_string(),
        })?;
        Ok(out)
    };

    let input = match (active, cfg.denoise_mode) {
        (Some(_), DenoiseMode::Pre) => run("pre", image)?,
        _ => image.clone(),
    };

    let floor = cfg.illumination.floor;
    let problem = IlluminationProblem::from_image(&input, cfg.illumination.clone())?;
    let coarse = problem.coarse().clone();
    let (refined, trace) = crate::illumination::refine_illumination(&problem)?;

    let divisor = refined.map(|v| v.max(floor));
    let mut reflection = input.channels();
    for r in reflection.iter_mut() {
        *r = r.zip_map(&divisor, |i, l| i / l)?;
    }

    if let (Some(_), DenoiseMode::Reflection) = (active, cfg.denoise_mode) {
        // PNG transport is unit-range; scale down and back up around the call.
        let scale = reflection.iter().map(ScalarField::max).fold(1.0, f64::max);
        let scaled = [0, 1, 2].map(|c| reflection[c].map(|v| v / scale));
        let cleaned = run("reflection", &RgbImage::from_channels(&scaled)?)?;
        reflection = cleaned.channels().map(|c| c.map(|v| v * scale));
    }

    let boosted = detail_boost(&reflection, &input, &cfg.boost)?;
    let gamma = adaptive_gamma_map(&refined, &cfg.gamma);
    let adjusted = adjust_illumination(&refined, &gamma)?;

    let combined = [0, 1, 2].map(|c| {
        boosted[c]
            .zip_map(&adjusted, |r, l| r * l)
            .expect("channel dimensions agree")
    });
    let mut output = RgbImage::from_channels(&combined)?;

    if let (Some(_), DenoiseMode::Post) = (active, cfg.denoise_mode) {
        output = run("post", &output)?;
    }

    Ok(Enhanced {
        image: output,
        intermediates: Intermediates {
            coarse,
            refined,
            gamma,
            adjusted,
            reflection,
            boosted,
            trace,
        },
    })
}
