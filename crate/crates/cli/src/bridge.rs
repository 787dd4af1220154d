//! Subprocess bridge to an external denoiser.
//!
//! The image is written as a 16-bit PNG into a private temporary directory,
//! `{in}` and `{out}` in the command template are replaced by the quoted
//! paths, and the command runs under `sh -c`. The result must be a PNG of the
//! same size.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use lowlight_core::enhancement::Denoiser;
use lowlight_core::io::{load_png, save_png, PngDepth};
use lowlight_core::{Error, Result, RgbImage};
use wait_timeout::ChildExt;

#[derive(Debug, Clone)]
pub struct CommandDenoiser {
    template: String,
    timeout: Duration,
}

fn bridge_error(reason: impl Into<String>) -> Error {
    Error::Denoiser {
        stage: "bridge",
        reason: reason.into(),
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

impl CommandDenoiser {
    /// Fails with an argument error unless the template has both placeholders.
    pub fn new(template: impl Into<String>, timeout: Duration) -> Result<Self> {
        let template = template.into();
        for placeholder in ["{in}", "{out}"] {
            if !template.contains(placeholder) {
                return Err(Error::Argument(format!(
                    "denoiser command must contain {placeholder}: `{template}`"
                )));
            }
        }
        Ok(Self { template, timeout })
    }

    pub fn command_for(&self, input: &Path, output: &Path) -> String {
        self.template
            .replace("{in}", &shell_quote(input))
            .replace("{out}", &shell_quote(output))
    }
}

impl Denoiser for CommandDenoiser {
    fn denoise(&self, image: &RgbImage) -> Result<RgbImage> {
        let dir = tempfile::tempdir().map_err(|e| bridge_error(format!("temporary directory: {e}")))?;
        let input = dir.path().join("in.png");
        let output = dir.path().join("out.png");
        save_png(image, &input, PngDepth::Sixteen)?;

        let command = self.command_for(&input, &output);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .stdin(Stdio::null())
            .spawn()
            .map_err(|e| bridge_error(format!("cannot start `{command}`: {e}")))?;
        let status = match child
            .wait_timeout(self.timeout)
            .map_err(|e| bridge_error(e.to_string()))?
        {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(bridge_error(format!(
                    "`{command}` timed out after {} s",
                    self.timeout.as_secs_f64()
                )));
            }
        };
        if !status.success() {
            return Err(bridge_error(format!("`{command}` failed with {status}")));
        }
        let result = load_png(&output).map_err(|e| bridge_error(format!("reading result: {e}")))?;
        if result.dims() != image.dims() {
            return Err(Error::DimensionMismatch {
                expected: image.dims(),
                actual: result.dims(),
            });
        }
        Ok(result)
    }
}
