//! Batch front end: `enhance`, `degrade` and `evaluate` subcommands.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, bad config,
//! empty manifest) and 2 for runtime failures (I/O, solver, denoiser, or any
//! failed row in a batch).

pub mod bridge;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lowlight_core::config::{DenoiseMode, EnhanceConfig};
use lowlight_core::degradation::{synthesize, DegradeSpec, NoiseStage};
use lowlight_core::enhancement::{enhance_with, Denoiser, Enhanced};
use lowlight_core::io::{load_png, save_pfm, save_png, save_preview_png, PngDepth};
use lowlight_core::report::{
    evaluate_entries, parse_metrics, read_manifest, write_manifest, LoeReference, ManifestEntry,
    QualityReport,
};
use lowlight_core::{Error, RgbImage, ScalarField};
use rayon::prelude::*;

use crate::bridge::CommandDenoiser;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lowlight", version, about = "Retinex low-light image enhancement")]
pub struct Cli {
    /// Config file of `key = value` lines, or `default` for built-in values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for batch runs; 0 uses every logical CPU.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Write intermediate maps and the objective trace here.
    #[arg(long, global = true, value_name = "DIR")]
    pub dump_intermediates: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhance one image (`IN OUT`), several (`--out-dir`), or a manifest.
    Enhance(EnhanceArgs),
    /// Synthesize low-light images from clean ones.
    Degrade(DegradeArgs),
    /// Score image pairs listed in a manifest.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// `IN OUT`, or only inputs when `--out-dir` is given.
    pub paths: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Enhance the candidate column of this manifest.
    #[arg(long, value_name = "FILE", requires = "out_dir")]
    pub manifest: Option<PathBuf>,
    /// Manifest of enhanced outputs; defaults to `OUT_DIR/manifest.txt`.
    #[arg(long, value_name = "FILE", requires = "manifest")]
    pub write_manifest: Option<PathBuf>,
    /// none, pre, reflection or post.
    #[arg(long)]
    pub denoise_mode: Option<String>,
    /// Shell command with `{in}` and `{out}` placeholders.
    #[arg(long)]
    pub denoiser_cmd: Option<String>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output PNG bit depth.
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    /// `IN OUT`; omit when `--input-dir` is given.
    pub paths: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub darken: f64,
    /// Noise variance on the 0–255 scale.
    #[arg(long, default_value_t = 25.0)]
    pub noise_var: f64,
    /// before_darken or after_darken.
    #[arg(long, default_value = "before_darken")]
    pub noise_stage: String,
    /// Degrade every PNG in this directory.
    #[arg(long, value_name = "DIR", requires = "out_dir")]
    pub input_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Corpus manifest; defaults to `OUT_DIR/manifest.txt`.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub depth: u32,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Comma-separated subset of psnr, ssim, loe.
    #[arg(long, default_value = "psnr,ssim,loe")]
    pub metrics: String,
    /// CSV output path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Plain-text table output path; the table is always printed.
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// LOE lightness-order reference: input or ground-truth.
    #[arg(long, default_value = "input")]
    pub loe_ref: String,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Enhance(args) => cmd_enhance(cli, args),
        Command::Degrade(args) => cmd_degrade(cli, args),
        Command::Evaluate(args) => cmd_evaluate(args),
    })
}

/// Built-in defaults, then the config file, then flags.
pub fn effective_config(cli: &Cli, args: &EnhanceArgs) -> CliResult<EnhanceConfig> {
    let mut cfg = match cli.config.as_deref() {
        None | Some("default") => EnhanceConfig::default(),
        Some(path) => EnhanceConfig::load(path)?,
    };
    for item in &args.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(mode) = &args.denoise_mode {
        cfg.denoise_mode = mode.parse()?;
    }
    if let Some(cmd) = &args.denoiser_cmd {
        cfg.denoiser_cmd = Some(cmd.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_header(cfg_text: &str, seed: u64) -> String {
    format!(
        "lowlight {}\nseed = {seed}\n{cfg_text}",
        env!("CARGO_PKG_VERSION")
    )
}

/// Manifests resolve relative paths against their own directory, so rows are
/// written with absolute paths.
fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn absolute_entry(e: ManifestEntry) -> ManifestEntry {
    ManifestEntry {
        reference: absolute(&e.reference),
        candidate: absolute(&e.candidate),
        input: e.input.as_deref().map(absolute),
        note: e.note,
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

struct Job {
    input: PathBuf,
    output: PathBuf,
    dump: Option<PathBuf>,
}

fn cmd_enhance(cli: &Cli, args: &EnhanceArgs) -> CliResult<()> {
    let cfg = effective_config(cli, args)?;
    let depth = PngDepth::try_from(args.depth)?;
    let denoiser = match (&cfg.denoiser_cmd, cfg.denoise_mode) {
        (Some(cmd), mode) if mode != DenoiseMode::None => Some(CommandDenoiser::new(
            cmd.clone(),
            Duration::from_secs(cfg.denoiser_timeout_secs),
        )?),
        _ => None,
    };

    let mut manifest_rows: Vec<ManifestEntry> = Vec::new();
    let jobs: Vec<Job> = match (&args.manifest, &args.out_dir) {
        (Some(manifest), Some(out_dir)) => {
            if !args.paths.is_empty() {
                return Err(usage("positional paths cannot be combined with --manifest"));
            }
            let entries = read_manifest(manifest)?;
            if entries.is_empty() {
                return Err(usage(format!("manifest {} lists no images", manifest.display())));
            }
            let mut jobs = Vec::new();
            for entry in entries {
                let output = out_dir.join(format!("{}.png", entry.id()));
                manifest_rows.push(ManifestEntry {
                    reference: entry.reference.clone(),
                    candidate: output.clone(),
                    note: "enhanced".into(),
                    input: Some(entry.candidate.clone()),
                });
                jobs.push(Job {
                    dump: cli.dump_intermediates.as_ref().map(|d| d.join(entry.id())),
                    input: entry.candidate,
                    output,
                });
            }
            jobs
        }
        (None, Some(out_dir)) => {
            if args.paths.is_empty() {
                return Err(usage("no input images"));
            }
            args.paths
                .iter()
                .map(|input| Job {
                    input: input.clone(),
                    output: out_dir.join(format!("{}.png", stem(input))),
                    dump: cli.dump_intermediates.as_ref().map(|d| d.join(stem(input))),
                })
                .collect()
        }
        (None, None) => match args.paths.as_slice() {
            [input, output] => vec![Job {
                input: input.clone(),
                output: output.clone(),
                dump: cli.dump_intermediates.clone(),
            }],
            _ => return Err(usage("expected `IN OUT`, or inputs with --out-dir")),
        },
        (Some(_), None) => unreachable!("clap requires --out-dir with --manifest"),
    };
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
    }
    let mut outputs: Vec<&PathBuf> = jobs.iter().map(|j| &j.output).collect();
    outputs.sort();
    if outputs.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("two inputs map to the same output file"));
    }

    let cfg_text = cfg.to_text();
    let results: Vec<CliResult<()>> = jobs
        .par_iter()
        .map(|job| enhance_one(job, &cfg, &cfg_text, denoiser.as_ref(), depth))
        .collect();
    let mut failed = 0;
    for (job, result) in jobs.iter().zip(&results) {
        if let Err(e) = result {
            eprintln!("{}: {e}", job.input.display());
            failed += 1;
        }
    }

    if let Some(manifest) = &args.manifest {
        let out_dir = args.out_dir.as_ref().expect("checked above");
        let path = args
            .write_manifest
            .clone()
            .unwrap_or_else(|| out_dir.join("manifest.txt"));
        let written: Vec<ManifestEntry> = manifest_rows
            .into_iter()
            .zip(&results)
            .filter(|(_, r)| r.is_ok())
            .map(|(e, _)| absolute_entry(e))
            .collect();
        let header = format!(
            "enhanced from {}\n{}",
            manifest.display(),
            run_header(&cfg_text, cli.seed)
        );
        write_manifest(&path, &header, &written)?;
    }

    match (failed, results.len()) {
        (0, _) => Ok(()),
        (1, 1) => Err(results.into_iter().next().expect("one result").unwrap_err()),
        (n, total) => Err(CliError::Runtime(format!("{n} of {total} images failed"))),
    }
}

fn enhance_one(
    job: &Job,
    cfg: &EnhanceConfig,
    cfg_text: &str,
    denoiser: Option<&CommandDenoiser>,
    depth: PngDepth,
) -> CliResult<()> {
    let image = load_png(&job.input)?;
    let enhanced = enhance_with(&image, cfg, denoiser.map(|d| d as &dyn Denoiser))?;
    save_png(&enhanced.image, &job.output, depth)?;
    if let Some(dir) = &job.dump {
        dump_intermediates(dir, &enhanced, cfg_text)?;
    }
    Ok(())
}

fn rgb_preview(channels: &[ScalarField; 3]) -> CliResult<RgbImage> {
    let scale = channels.iter().map(ScalarField::max).fold(1.0, f64::max);
    Ok(RgbImage::from_channels(
        &channels.clone().map(|c| c.map(|v| v / scale)),
    )?)
}

/// Writes the maps of one run as PFM with 8-bit PNG previews, plus the
/// objective trace and the effective config.
pub fn dump_intermediates(dir: &Path, enhanced: &Enhanced, cfg_text: &str) -> CliResult<()> {
    create_dir(dir)?;
    let m = &enhanced.intermediates;
    for (name, field) in [
        ("L_coarse", &m.coarse),
        ("L_refined", &m.refined),
        ("L_gamma", &m.adjusted),
    ] {
        save_pfm(&[field], dir.join(format!("{name}.pfm")))?;
        save_preview_png(field, dir.join(format!("{name}.png")))?;
    }
    for (name, channels) in [("R", &m.reflection), ("R_boost", &m.boosted)] {
        save_pfm(
            &[&channels[0], &channels[1], &channels[2]],
            dir.join(format!("{name}.pfm")),
        )?;
        save_png(
            &rgb_preview(channels)?,
            dir.join(format!("{name}.png")),
            PngDepth::Eight,
        )?;
    }
    let trace: String = m
        .trace
        .objective_per_iter
        .iter()
        .map(|v| format!("{v:e}\n"))
        .collect();
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    };
    write("objective.txt", &trace)?;
    let cg: String = m.trace.cg_iterations.iter().map(|n| format!("{n}\n")).collect();
    write("cg_iterations.txt", &cg)?;
    write("config.txt", cfg_text)
}

fn cmd_degrade(cli: &Cli, args: &DegradeArgs) -> CliResult<()> {
    let noise_stage: NoiseStage = args.noise_stage.parse()?;
    let depth = PngDepth::try_from(args.depth)?;
    let spec_for = |seed: u64| DegradeSpec {
        darken: args.darken,
        noise_var: args.noise_var,
        seed,
        noise_stage,
    };
    spec_for(cli.seed).validate()?;

    let Some(input_dir) = &args.input_dir else {
        let [input, output] = args.paths.as_slice() else {
            return Err(usage("expected `IN OUT`, or --input-dir with --out-dir"));
        };
        let image = load_png(input)?;
        save_png(&synthesize(&image, &spec_for(cli.seed))?, output, depth)?;
        return Ok(());
    };
    if !args.paths.is_empty() {
        return Err(usage("positional paths cannot be combined with --input-dir"));
    }
    let out_dir = args.out_dir.as_ref().expect("clap requires --out-dir");
    let mut inputs: Vec<PathBuf> = fs::read_dir(input_dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", input_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(usage(format!("no PNG files in {}", input_dir.display())));
    }
    create_dir(out_dir)?;

    let results: Vec<CliResult<ManifestEntry>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| {
            let spec = spec_for(cli.seed.wrapping_add(i as u64));
            let output = out_dir.join(format!("{}.png", stem(input)));
            save_png(&synthesize(&load_png(input)?, &spec)?, &output, depth)?;
            Ok(ManifestEntry {
                reference: input.clone(),
                candidate: output,
                note: spec.to_string(),
                input: None,
            })
        })
        .collect();
    let mut entries = Vec::new();
    let mut failed = 0;
    for (input, result) in inputs.iter().zip(results) {
        match result {
            Ok(e) => entries.push(absolute_entry(e)),
            Err(e) => {
                eprintln!("{}: {e}", input.display());
                failed += 1;
            }
        }
    }
    let manifest = args
        .manifest
        .clone()
        .unwrap_or_else(|| out_dir.join("manifest.txt"));
    let header = format!(
        "degraded from {}\n{}\nimage i uses seed + i",
        input_dir.display(),
        spec_for(cli.seed)
    );
    write_manifest(&manifest, &header, &entries)?;
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} of {} images failed",
            inputs.len()
        )));
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let metrics = parse_metrics(&args.metrics)?;
    let loe_ref: LoeReference = args.loe_ref.parse()?;
    let entries = read_manifest(&args.manifest)?;
    if entries.is_empty() {
        return Err(usage(format!(
            "manifest {} lists no image pairs",
            args.manifest.display()
        )));
    }
    let rows: Vec<QualityReport> = entries
        .par_iter()
        .map(|e| evaluate_entries(std::slice::from_ref(e), &metrics, loe_ref))
        .collect();
    let mut report = QualityReport {
        metrics,
        loe_reference: loe_ref,
        per_image: Vec::new(),
        errors: Vec::new(),
    };
    for row in rows {
        report.per_image.extend(row.per_image);
        report.errors.extend(row.errors);
    }

    let table = report.to_table();
    print!("{table}");
    let write = |path: &Path, text: &str| {
        fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    };
    if let Some(path) = &args.out {
        write(path, &report.to_csv())?;
    }
    if let Some(path) = &args.table {
        write(path, &table)?;
    }
    for e in &report.errors {
        eprintln!("{}: {}", e.id, e.message);
    }
    if !report.errors.is_empty() {
        return Err(CliError::Runtime(format!(
            "{} of {} rows failed",
            report.errors.len(),
            entries.len()
        )));
    }
    Ok(())
}
