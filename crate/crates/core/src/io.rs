//! PNG and PFM file I/O.
//!
//! PNG is the interchange format for images (8- or 16-bit RGB/RGBA in,
//! 8- or 16-bit RGB out). PFM stores raw float maps for debugging dumps:
//! little-endian `f32`, scale `-1.0`, rows written bottom to top.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{RgbImage, ScalarField};

/// Bit depth of a written PNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PngDepth {
    Eight,
    Sixteen,
}

impl PngDepth {
    pub fn max_value(self) -> f64 {
        match self {
            PngDepth::Eight => 255.0,
            PngDepth::Sixteen => 65535.0,
        }
    }
}

impl TryFrom<u32> for PngDepth {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(PngDepth::Eight),
            16 => Ok(PngDepth::Sixteen),
            other => Err(Error::Argument(format!("unsupported PNG depth {other}"))),
        }
    }
}

/// Round-half-up quantization of a unit-interval value.
#[inline]
pub fn quantize(v: f64, depth: PngDepth) -> u16 {
    let max = depth.max_value();
    (v.clamp(0.0, 1.0) * max + 0.5).floor().min(max) as u16
}

pub fn load_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_png(BufReader::new(file)).map_err(|reason| Error::io(path, reason))
}

fn decode_png<R: BufRead + std::io::Seek>(reader: R) -> std::result::Result<RgbImage, String> {
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "image too large".to_string())?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;

    let samples = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => return Err(format!("unsupported color type {other:?}")),
    };
    let (bytes, max) = match info.bit_depth {
        png::BitDepth::Eight => (1, 255.0),
        png::BitDepth::Sixteen => (2, 65535.0),
        other => return Err(format!("unsupported bit depth {other:?}")),
    };

    let (width, height) = (info.width as usize, info.height as usize);
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        let row = &buf[y * info.line_size..(y + 1) * info.line_size];
        for x in 0..width {
            let base = x * samples * bytes;
            let mut px = [0.0; 3];
            for (c, v) in px.iter_mut().enumerate() {
                let o = base + c * bytes;
                let raw = if bytes == 1 {
                    row[o] as f64
                } else {
                    u16::from_be_bytes([row[o], row[o + 1]]) as f64
                };
                *v = raw / max;
            }
            pixels.push(px);
        }
    }
    RgbImage::from_pixels(height, width, pixels).map_err(|e| e.to_string())
}

pub fn save_png(image: &RgbImage, path: impl AsRef<Path>, depth: PngDepth) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let (h, w) = image.dims();
    let mut encoder = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(png::ColorType::Rgb);

    let data: Vec<u8> = match depth {
        PngDepth::Eight => {
            encoder.set_depth(png::BitDepth::Eight);
            image
                .pixels()
                .iter()
                .flat_map(|p| p.map(|v| quantize(v, depth) as u8))
                .collect()
        }
        PngDepth::Sixteen => {
            encoder.set_depth(png::BitDepth::Sixteen);
            image
                .pixels()
                .iter()
                .flat_map(|p| p.map(|v| quantize(v, depth).to_be_bytes()))
                .flatten()
                .collect()
        }
    };

    let mut writer = encoder.write_header().map_err(|e| Error::io(path, e))?;
    writer.write_image_data(&data).map_err(|e| Error::io(path, e))?;
    writer.finish().map_err(|e| Error::io(path, e))
}

/// Writes a field as an 8-bit gray preview, rescaled by its maximum when that exceeds 1.
pub fn save_preview_png(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let scale = field.max().max(1.0);
    let img = RgbImage::from_fn(field.height(), field.width(), |y, x| {
        let v = field.get(y, x) / scale;
        [v, v, v]
    });
    save_png(&img, path, PngDepth::Eight)
}

/// Writes one (`Pf`) or three (`PF`) float channels.
pub fn save_pfm(channels: &[&ScalarField], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (magic, first) = match channels {
        [f] => ("Pf", *f),
        [f, g, b] => {
            f.ensure_same_dims(g)?;
            f.ensure_same_dims(b)?;
            ("PF", *f)
        }
        _ => return Err(Error::Argument("PFM holds either one or three channels".into())),
    };
    let (h, w) = first.dims();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        write!(out, "{magic}\n{w} {h}\n-1.0\n")?;
        for y in (0..h).rev() {
            for x in 0..w {
                for c in channels {
                    out.write_all(&(c.get(y, x) as f32).to_le_bytes())?;
                }
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a PFM written by [`save_pfm`] (either endianness).
pub fn load_pfm(path: impl AsRef<Path>) -> Result<Vec<ScalarField>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;

    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        let t = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1;
        Ok(t)
    };
    let parse = |t: String| {
        t.parse::<f64>()
            .map_err(|e| format!("bad header value `{t}`: {e}"))
    };
    let header = (|| {
        let magic = token()?;
        let w = parse(token()?)? as usize;
        let h = parse(token()?)? as usize;
        let scale = parse(token()?)?;
        Ok::<_, String>((magic, w, h, scale))
    })()
    .map_err(|e| Error::io(path, e))?;
    let (magic, w, h, scale) = header;
    let nc = match magic.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::io(path, format!("not a PFM file (magic `{other}`)"))),
    };
    let body = &bytes[pos..];
    if body.len() < w * h * nc * 4 || w == 0 || h == 0 {
        return Err(Error::io(path, "truncated PFM payload"));
    }
    let mut fields = vec![ScalarField::zeros(h, w); nc];
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            for (c, field) in fields.iter_mut().enumerate() {
                let o = ((row * w + x) * nc + c) * 4;
                let raw = [body[o], body[o + 1], body[o + 2], body[o + 3]];
                let v = if scale < 0.0 {
                    f32::from_le_bytes(raw)
                } else {
                    f32::from_be_bytes(raw)
                };
                field.set(y, x, v as f64);
            }
        }
    }
    Ok(fields)
}
