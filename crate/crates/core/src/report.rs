//! Corpus manifests and aggregated quality reports.
//!
//! A manifest is a UTF-8 text file with one tab-separated row per image pair:
//!
//! ```text
//! reference<TAB>candidate[<TAB>note[<TAB>input]]
//! ```
//!
//! `reference` is the ground truth, `candidate` the image being scored,
//! `note` free text (the degradation spec or echoed config), and `input` the
//! low-light image the candidate was produced from. Relative paths resolve
//! against the manifest's directory. Blank lines and `#` comments are skipped.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::load_png;
use crate::metrics;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub reference: PathBuf,
    pub candidate: PathBuf,
    pub note: String,
    pub input: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{}\t{}\t{}",
            self.reference.display(),
            self.candidate.display(),
            self.note.replace(['\t', '\n'], " ")
        );
        if let Some(input) = &self.input {
            line.push('\t');
            line.push_str(&input.display().to_string());
        }
        line
    }

    pub fn id(&self) -> String {
        self.candidate
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.candidate.display().to_string())
    }
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let resolve = |p: &str| {
        let p = PathBuf::from(p);
        if p.is_relative() {
            base.join(p)
        } else {
            p
        }
    };
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Argument(format!(
                "manifest line {}: expected `reference<TAB>candidate[<TAB>note[<TAB>input]]`",
                n + 1
            )));
        }
        entries.push(ManifestEntry {
            reference: resolve(fields[0]),
            candidate: resolve(fields[1]),
            note: fields.get(2).map(|s| s.to_string()).unwrap_or_default(),
            input: fields.get(3).filter(|s| !s.is_empty()).map(|s| resolve(s)),
        });
    }
    Ok(entries)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

pub fn write_manifest(path: impl AsRef<Path>, header: &str, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for line in header.lines() {
        let _ = writeln!(text, "# {line}");
    }
    for e in entries {
        text.push_str(&e.to_line());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Psnr,
    Ssim,
    Loe,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Psnr, Metric::Ssim, Metric::Loe];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Psnr => "PSNR",
            Metric::Ssim => "SSIM",
            Metric::Loe => "LOE",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psnr" => Ok(Metric::Psnr),
            "ssim" => Ok(Metric::Ssim),
            "loe" => Ok(Metric::Loe),
            other => Err(Error::Argument(format!("unknown metric `{other}`"))),
        }
    }
}

pub fn parse_metrics(list: &str) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    for m in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: Metric = m.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Argument("no metrics requested".into()));
    }
    Ok(out)
}

/// Which lightness order LOE compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoeReference {
    /// The low-light input (manifest column 4).
    #[default]
    Input,
    /// The ground truth (manifest column 1).
    GroundTruth,
}

impl LoeReference {
    pub fn as_str(self) -> &'static str {
        match self {
            LoeReference::Input => "input",
            LoeReference::GroundTruth => "ground-truth",
        }
    }
}

impl FromStr for LoeReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(LoeReference::Input),
            "ground-truth" | "ground_truth" | "reference" => Ok(LoeReference::GroundTruth),
            other => Err(Error::Argument(format!("unknown LOE reference `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScores {
    pub id: String,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub loe: Option<f64>,
    /// LOE reference actually used for this row.
    pub loe_reference: Option<LoeReference>,
}

impl ImageScores {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Psnr => self.psnr,
            Metric::Ssim => self.ssim,
            Metric::Loe => self.loe,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub id: String,
    pub message: String,
}

/// Per-metric mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample (n − 1) convention; 0 for a single image.
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(Summary { mean, std })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub metrics: Vec<Metric>,
    pub loe_reference: LoeReference,
    pub per_image: Vec<ImageScores>,
    pub errors: Vec<RowError>,
}

impl QualityReport {
    pub fn summary(&self, m: Metric) -> Option<Summary> {
        let values: Vec<f64> = self.per_image.iter().filter_map(|s| s.get(m)).collect();
        mean_std(&values)
    }

    /// `id,psnr_db,ssim,loe` rows followed by `mean` and `std` rows.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("id,psnr_db,ssim,loe\n");
        for s in &self.per_image {
            let id = if s.id.contains([',', '"']) {
                format!("\"{}\"", s.id.replace('"', "\"\""))
            } else {
                s.id.clone()
            };
            let _ = writeln!(out, "{id},{},{},{}", cell(s.psnr), cell(s.ssim), cell(s.loe));
        }
        let stats: Vec<Option<Summary>> = Metric::ALL.iter().map(|&m| self.summary(m)).collect();
        let _ = writeln!(
            out,
            "mean,{},{},{}",
            cell(stats[0].map(|s| s.mean)),
            cell(stats[1].map(|s| s.mean)),
            cell(stats[2].map(|s| s.mean))
        );
        let _ = writeln!(
            out,
            "std,{},{},{}",
            cell(stats[0].map(|s| s.std)),
            cell(stats[1].map(|s| s.std)),
            cell(stats[2].map(|s| s.std))
        );
        out
    }

    pub fn to_table(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# images: {}  failed: {}",
            self.per_image.len(),
            self.errors.len()
        )?;
        if self.metrics.contains(&Metric::Loe) {
            writeln!(f, "# loe reference: {}", self.loe_reference.as_str())?;
        }
        write!(f, "{:<24}", "image")?;
        for m in &self.metrics {
            write!(f, "{:>12}", m.label())?;
        }
        writeln!(f)?;
        for s in &self.per_image {
            write!(f, "{:<24}", s.id)?;
            for &m in &self.metrics {
                match s.get(m) {
                    Some(v) => write!(f, "{v:>12.4}")?,
                    None => write!(f, "{:>12}", "-")?,
                }
            }
            writeln!(f)?;
        }
        for &m in &self.metrics {
            if let Some(s) = self.summary(m) {
                writeln!(f, "{:<6}{:.4} ± {:.4}", m.label(), s.mean, s.std)?;
            }
        }
        for e in &self.errors {
            writeln!(f, "error {}: {}", e.id, e.message)?;
        }
        Ok(())
    }
}

fn score_entry(entry: &ManifestEntry, metrics: &[Metric], loe_ref: LoeReference) -> Result<ImageScores> {
    let reference = load_png(&entry.reference)?;
    let candidate = load_png(&entry.candidate)?;
    let mut scores = ImageScores {
        id: entry.id(),
        psnr: None,
        ssim: None,
        loe: None,
        loe_reference: None,
    };
    for m in metrics {
        match m {
            Metric::Psnr => scores.psnr = Some(metrics::psnr(&candidate, &reference)?),
            Metric::Ssim => scores.ssim = Some(metrics::ssim(&candidate, &reference)?),
            Metric::Loe => {
                // Rows without an input column fall back to the ground truth.
                let (order, used) = match (loe_ref, &entry.input) {
                    (LoeReference::Input, Some(path)) => (load_png(path)?, LoeReference::Input),
                    _ => (reference.clone(), LoeReference::GroundTruth),
                };
                scores.loe = Some(metrics::loe(&candidate, &order)?);
                scores.loe_reference = Some(used);
            }
        }
    }
    Ok(scores)
}

/// Scores every entry in manifest order. Rows that fail are recorded in
/// `errors` and left out of the aggregates.
pub fn evaluate_entries(
    entries: &[ManifestEntry],
    metrics: &[Metric],
    loe_ref: LoeReference,
) -> QualityReport {
    let mut report = QualityReport {
        metrics: metrics.to_vec(),
        loe_reference: loe_ref,
        per_image: Vec::new(),
        errors: Vec::new(),
    };
    for entry in entries {
        match score_entry(entry, metrics, loe_ref) {
            Ok(s) => report.per_image.push(s),
            Err(e) => report.errors.push(RowError {
                id: entry.id(),
                message: e.to_string(),
            }),
        }
    }
    report
}

pub fn evaluate_corpus(
    manifest: impl AsRef<Path>,
    metrics: &[Metric],
    loe_ref: LoeReference,
) -> Result<QualityReport> {
    let entries = read_manifest(manifest.as_ref())?;
    if entries.is_empty() {
        return Err(Error::Argument(format!(
            "manifest {} lists no image pairs",
            manifest.as_ref().display()
        )));
    }
    Ok(evaluate_entries(&entries, metrics, loe_ref))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RgbImage;
    use crate::io::{save_png, PngDepth};

    #[test]
    fn manifest_parsing() {
        let text = "# header\n\na.png\tb.png\n/abs/c.png\td.png\tdarken=0.1\tin.png\n";
        let e = parse_manifest(text, Path::new("/base")).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].reference, PathBuf::from("/base/a.png"));
        assert_eq!(e[0].input, None);
        assert_eq!(e[1].reference, PathBuf::from("/abs/c.png"));
        assert_eq!(e[1].note, "darken=0.1");
        assert_eq!(e[1].input, Some(PathBuf::from("/base/in.png")));
        assert!(parse_manifest("only-one-field\n", Path::new(".")).is_err());
        let back = parse_manifest(&e[1].to_line(), Path::new("/base")).unwrap();
        assert_eq!(back[0], e[1]);
    }

    #[test]
    fn metric_lists() {
        assert_eq!(
            parse_metrics("psnr, SSIM,loe,psnr").unwrap(),
            Metric::ALL.to_vec()
        );
        assert!(parse_metrics("").is_err());
        assert!(parse_metrics("fsim").is_err());
    }

    #[test]
    fn summary_conventions() {
        assert_eq!(mean_std(&[3.0]).unwrap(), Summary { mean: 3.0, std: 0.0 });
        let s = mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).is_none());
    }

    #[test]
    fn identical_pairs_and_missing_rows() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::from_fn(12, 10, |y, x| [0.05 * x as f64, 0.07 * y as f64, 0.4]);
        save_png(&img, dir.path().join("a.png"), PngDepth::Eight).unwrap();
        save_png(&img, dir.path().join("b.png"), PngDepth::Eight).unwrap();
        let manifest = dir.path().join("m.txt");
        std::fs::write(&manifest, "a.png\ta.png\nb.png\tb.png\nmissing.png\tb.png\n").unwrap();

        let report = evaluate_corpus(&manifest, &Metric::ALL, LoeReference::Input).unwrap();
        assert_eq!(report.per_image.len(), 2);
        assert_eq!(report.errors.len(), 1);
        let psnr = report.summary(Metric::Psnr).unwrap();
        assert_eq!((psnr.mean, psnr.std), (99.0, 0.0));
        assert_eq!(report.summary(Metric::Ssim).unwrap().mean, 1.0);
        assert_eq!(report.per_image[0].loe_reference, Some(LoeReference::GroundTruth));

        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "id,psnr_db,ssim,loe");
        assert_eq!(lines[1], "a,99,1,0");
        assert_eq!(lines[3], "mean,99,1,0");
        assert_eq!(lines[4], "std,0,0,0");
        assert!(report.to_table().contains("PSNR  99.0000 ± 0.0000"));

        std::fs::write(&manifest, "# nothing\n").unwrap();
        assert!(evaluate_corpus(&manifest, &Metric::ALL, LoeReference::Input).is_err());
    }
}
