use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use wfk_core::filters::{apply_directional_filter, FilterParams};
use wfk_core::grid::add_noise;
use wfk_core::io;
use wfk_core::phantom::{sample_phantom, PhantomSpec};
use wfk_core::pipeline::{report_constants, run_pipeline, PipelineConfig};
use wfk_core::segmentation::{segment, SegmentOptions};
use wfk_core::wavefront::{extract_surfels, ExtractOptions, Threshold};
use wfk_core::{Convention, Error, Result, SpectralGrid};

/// Wavefront extraction and curve reconstruction from k-space samples.
#[derive(Parser)]
#[command(name = "wfk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a scene's Fourier transform on the grid and write a .ksp file.
    Phantom {
        /// Scene file; the built-in scene when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        m: u32,
        #[arg(long)]
        out: PathBuf,
        /// Also write the scene description used.
        #[arg(long)]
        emit_config: Option<PathBuf>,
    },
    /// Add complex Gaussian noise to k-space samples.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        /// Noise energy relative to the signal energy (0.05 = 5%).
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one directional filter and write the modulus as a 16-bit PGM.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        /// Filter direction (radians; `pi/4` style accepted).
        #[arg(long, value_parser = real)]
        theta: f64,
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long, value_enum, default_value_t = Scale::Raw)]
        convention: Scale,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract surfels for one direction or the whole bank.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        /// Single direction; every direction of the bank when omitted.
        #[arg(long, value_parser = real)]
        theta: Option<f64>,
        #[command(flatten)]
        bank: BankArgs,
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct boundary curves.
    Segment {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        bank: BankArgs,
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long)]
        out: PathBuf,
        /// SVG overlay of the curves.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the derived constants of a configuration.
    Constants {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` settings, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the full pipeline from a configuration file.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` settings, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Raw,
    Calibrated,
}

#[derive(Args)]
struct BankArgs {
    /// Defaults to k_max/2.
    #[arg(long, value_parser = real)]
    k_tex: Option<f64>,
    /// Defaults to the grid's k_max.
    #[arg(long, value_parser = real)]
    k_max: Option<f64>,
    #[arg(long, value_parser = real, default_value = "pi/16")]
    alpha: f64,
    /// Number of directions A.
    #[arg(long = "angles", default_value_t = 16)]
    angles: usize,
}

#[derive(Args)]
struct TauArgs {
    /// Threshold as `fraction:Q` (of each image's maximum) or `absolute:T`.
    #[arg(long, default_value = "fraction:0.85")]
    tau: String,
}

fn real(s: &str) -> std::result::Result<f64, String> {
    wfk_core::pipeline::parse_real(s).ok_or_else(|| format!("`{s}` is not a number"))
}

impl BankArgs {
    fn params(&self, grid: &SpectralGrid) -> Result<FilterParams> {
        let k_max = self.k_max.unwrap_or(grid.k_max());
        FilterParams::new(self.k_tex.unwrap_or(0.5 * k_max), k_max, self.alpha, self.angles)
    }
}

impl TauArgs {
    fn threshold(&self) -> Result<Threshold> {
        let (mode, value) = self.tau.split_once(':').ok_or_else(|| Error::param("--tau takes MODE:VALUE"))?;
        let x = real(value).map_err(Error::param)?;
        match mode {
            "fraction" => Ok(Threshold::Fraction(x)),
            "absolute" => Ok(Threshold::Absolute(x)),
            "theory" => Err(Error::param("the theoretical threshold needs a scene; use `wfk run` with `tau = theory Q`")),
            other => Err(Error::param(format!("unknown threshold mode `{other}`"))),
        }
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn pipeline_config(config: Option<&Path>, set: &[String]) -> Result<PipelineConfig> {
    let mut cfg = match config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for item in set {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::param(format!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg.set(k.trim(), v.trim(), Path::new("."))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Phantom { config, m, out, emit_config } => {
            let spec = match &config {
                Some(p) => PhantomSpec::from_config_file(p)?,
                None => PhantomSpec::default_phantom(),
            };
            let grid = sample_phantom(&spec, m)?;
            io::save_ksp(&out, &grid)?;
            if let Some(p) = emit_config {
                write(&p, spec.to_config())?;
            }
        }
        Command::Noise { input, level, seed, out } => {
            let grid = io::load_ksp(&input)?;
            io::save_ksp(&out, &add_noise(&grid, level, seed)?)?;
        }
        Command::Filter { input, theta, bank, convention, out } => {
            let grid = io::load_ksp(&input)?;
            let conv = match convention {
                Scale::Raw => Convention::TheoremRaw,
                Scale::Calibrated => Convention::Calibrated,
            };
            let image = apply_directional_filter(&grid, theta, &bank.params(&grid)?, conv)?;
            io::save_edge_map(&out, &image)?;
        }
        Command::Extract { input, theta, bank, tau, out } => {
            let grid = io::load_ksp(&input)?;
            let params = bank.params(&grid)?;
            let mut opts = ExtractOptions::for_grid(grid.m());
            opts.threshold = tau.threshold()?;
            let thetas = theta.map_or_else(|| params.angles(), |t| vec![t]);
            let per: Vec<_> = thetas.par_iter().map(|&t| extract_surfels(&grid, t, &params, &opts)).collect::<Result<_>>()?;
            let surfels: Vec<_> = per.into_iter().flatten().collect();
            write(&out, io::surfels_csv(&surfels))?;
            eprintln!("{} surfels", surfels.len());
        }
        Command::Segment { input, bank, tau, out, svg } => {
            let grid = io::load_ksp(&input)?;
            let params = bank.params(&grid)?;
            let mut opts = SegmentOptions::for_grid(grid.m(), &params, None)?;
            opts.extract.threshold = tau.threshold()?;
            let seg = segment(&grid, &params, &opts)?;
            write(&out, io::curves_csv(&seg.curves))?;
            if let Some(p) = svg {
                let backdrop = io::edge_map(&wfk_core::grid::inverse_transform(&grid));
                write(&p, io::overlay_svg(Some(&backdrop), &seg.curves, &seg.surfels, 512.0))?;
            }
            let closed = seg.closed_curves().count();
            eprintln!("{closed} closed and {} open curves", seg.curves.len() - closed);
        }
        Command::Constants { config, set } => {
            let cfg = pipeline_config(config.as_deref(), &set)?;
            let scene = cfg.load_phantom()?;
            let params = cfg.filter_params(scene.as_ref())?;
            print!("{}", report_constants(&params, scene.as_ref()));
        }
        Command::Run { config, set, out, noise, seed } => {
            let mut cfg = pipeline_config(config.as_deref(), &set)?;
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(n) = noise {
                cfg.noise = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let summary = run_pipeline(&cfg)?;
            println!(
                "{} surfels, {} closed and {} open curves; {} files in {}",
                summary.surfels,
                summary.closed_curves,
                summary.open_curves,
                summary.files.len(),
                summary.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("WFK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
