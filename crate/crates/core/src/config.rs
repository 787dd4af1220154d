//! Pipeline configuration and its flat `key = value` text form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::enhancement::{BoostConfig, GammaConfig};
use crate::error::{Error, Result};
use crate::illumination::IlluminationParams;

/// Where the external denoiser is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenoiseMode {
    None,
    /// On the low-light input, before enhancement.
    Pre,
    /// On the reflection map, before detail boosting.
    Reflection,
    /// On the enhanced output.
    #[default]
    Post,
}

impl DenoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DenoiseMode::None => "none",
            DenoiseMode::Pre => "pre",
            DenoiseMode::Reflection => "reflection",
            DenoiseMode::Post => "post",
        }
    }
}

impl FromStr for DenoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DenoiseMode::None),
            "pre" => Ok(DenoiseMode::Pre),
            "reflection" => Ok(DenoiseMode::Reflection),
            "post" => Ok(DenoiseMode::Post),
            other => Err(Error::Argument(format!(
                "unknown denoise mode `{other}` (expected none, pre, reflection or post)"
            ))),
        }
    }
}

impl fmt::Display for DenoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub illumination: IlluminationParams,
    pub gamma: GammaConfig,
    pub boost: BoostConfig,
    pub denoise_mode: DenoiseMode,
    /// Shell command template with `{in}` and `{out}` placeholders.
    pub denoiser_cmd: Option<String>,
    pub denoiser_timeout_secs: u64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            illumination: IlluminationParams::default(),
            gamma: GammaConfig::default(),
            boost: BoostConfig::default(),
            denoise_mode: DenoiseMode::default(),
            denoiser_cmd: None,
            denoiser_timeout_secs: 300,
        }
    }
}

/// Every key accepted by [`EnhanceConfig::set`], in echo order.
pub const KEYS: &[&str] = &[
    "lambda1",
    "lambda2",
    "beta1",
    "beta2",
    "t",
    "sigma",
    "eps_rtv",
    "eps_s",
    "outer_iters",
    "inner_iters",
    "tolerance",
    "floor",
    "intensity_scale",
    "cg_max_iters",
    "cg_tolerance",
    "gamma0",
    "local_radius",
    "kappa",
    "guide_radius",
    "guide_eps",
    "denoise_mode",
    "denoiser_cmd",
    "denoiser_timeout",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Argument(format!("bad value `{value}` for `{key}`: {e}")))
}

impl EnhanceConfig {
    /// Strict positivity of every model weight, on top of the per-stage checks.
    pub fn validate(&self) -> Result<()> {
        let il = &self.illumination;
        il.validate()?;
        for (name, v) in [
            ("lambda1", il.lambda1),
            ("lambda2", il.lambda2),
            ("beta1", il.beta1),
            ("beta2", il.beta2),
            ("t", il.step),
        ] {
            if !(v > 0.0) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        self.gamma.validate()?;
        self.boost.validate()?;
        if let Some(cmd) = &self.denoiser_cmd {
            if !cmd.contains("{in}") || !cmd.contains("{out}") {
                return Err(Error::Argument(
                    "denoiser_cmd must contain both {in} and {out} placeholders".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let il = &mut self.illumination;
        match key {
            "lambda1" => il.lambda1 = parse(key, value)?,
            "lambda2" => il.lambda2 = parse(key, value)?,
            "beta1" => il.beta1 = parse(key, value)?,
            "beta2" => il.beta2 = parse(key, value)?,
            "t" => il.step = parse(key, value)?,
            "sigma" => il.sigma = parse(key, value)?,
            "eps_rtv" => il.eps_rtv = parse(key, value)?,
            "eps_s" => il.eps_s = parse(key, value)?,
            "outer_iters" => il.outer_iters = parse(key, value)?,
            "inner_iters" => il.inner_iters = parse(key, value)?,
            "tolerance" => il.tolerance = parse(key, value)?,
            "floor" => {
                il.floor = parse(key, value)?;
                self.gamma.floor = il.floor;
            }
            "intensity_scale" => il.intensity_scale = parse(key, value)?,
            "cg_max_iters" => il.cg.max_iters = parse(key, value)?,
            "cg_tolerance" => il.cg.tolerance = parse(key, value)?,
            "gamma0" => self.gamma.gamma0 = parse(key, value)?,
            "local_radius" => self.gamma.local_radius = parse(key, value)?,
            "kappa" => self.boost.kappa = parse(key, value)?,
            "guide_radius" => self.boost.guide_radius = parse(key, value)?,
            "guide_eps" => self.boost.guide_eps = parse(key, value)?,
            "denoise_mode" => self.denoise_mode = value.parse()?,
            "denoiser_cmd" => {
                self.denoiser_cmd = if value.is_empty() {
                    None
                } else {
                    Some(value.to_string())
                }
            }
            "denoiser_timeout" => self.denoiser_timeout_secs = parse(key, value)?,
            other => return Err(Error::Argument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let il = &self.illumination;
        Some(match key {
            "lambda1" => il.lambda1.to_string(),
            "lambda2" => il.lambda2.to_string(),
            "beta1" => il.beta1.to_string(),
            "beta2" => il.beta2.to_string(),
            "t" => il.step.to_string(),
            "sigma" => il.sigma.to_string(),
            "eps_rtv" => il.eps_rtv.to_string(),
            "eps_s" => il.eps_s.to_string(),
            "outer_iters" => il.outer_iters.to_string(),
            "inner_iters" => il.inner_iters.to_string(),
            "tolerance" => il.tolerance.to_string(),
            "floor" => il.floor.to_string(),
            "intensity_scale" => il.intensity_scale.to_string(),
            "cg_max_iters" => il.cg.max_iters.to_string(),
            "cg_tolerance" => il.cg.tolerance.to_string(),
            "gamma0" => self.gamma.gamma0.to_string(),
            "local_radius" => self.gamma.local_radius.to_string(),
            "kappa" => self.boost.kappa.to_string(),
            "guide_radius" => self.boost.guide_radius.to_string(),
            "guide_eps" => self.boost.guide_eps.to_string(),
            "denoise_mode" => self.denoise_mode.to_string(),
            "denoiser_cmd" => self.denoiser_cmd.clone().unwrap_or_default(),
            "denoiser_timeout" => self.denoiser_timeout_secs.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Argument(format!("line {}: expected `key = value`, got `{line}`", n + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Argument(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Canonical `key = value` listing of every field.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }
}
