use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod capture;

#[derive(Parser, Debug)]
#[command(name = "svbrdf", version, about = "svBRDF recovery from ambient and point-lit photos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides of the `fit` section of the session config.
#[derive(Args, Debug, Clone, Default)]
pub struct FitOverrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of pixel clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Multiplier of the default color/structure weighting.
    #[arg(long)]
    pub gamma_scale: Option<f64>,
    /// Strength of the recovered bumps.
    #[arg(long)]
    pub height_sigma: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recover the camera response curve from a color-card exposure stack.
    CalibrateResponse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the light intensity from a gray-card exposure stack.
    CalibrateGray {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit svBRDF maps to a material sample and export the bundle.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: FitOverrides,
        /// Also write the fitted maps of every iteration.
        #[arg(long)]
        debug_dumps: bool,
    },
    /// Render a bundle through the inverse response curve.
    RenderPreview {
        /// Bundle directory written by `fit` or `synth`.
        #[arg(long)]
        bundle: PathBuf,
        /// Response curve CSV.
        #[arg(long)]
        curve: PathBuf,
        /// Exposure time in seconds.
        #[arg(long)]
        exposure: f64,
        /// Output PNG.
        #[arg(long)]
        out: PathBuf,
        /// Light x in the normalized frame (defaults to the capture light).
        #[arg(long, allow_hyphen_values = true)]
        light_x: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        light_y: Option<f64>,
        /// Light intensity (defaults to the calibrated value).
        #[arg(long)]
        intensity: Option<f64>,
    },
    /// Write a synthetic capture session with known ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Image side in pixels.
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Cluster count written into the session config.
        #[arg(long, default_value_t = 16)]
        k: usize,
    },
    /// Cluster the ambient image and write the label map.
    ClusterDebug {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: FitOverrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CalibrateResponse { config, out } => commands::calibrate_response(&config, out),
        Command::CalibrateGray { config, out } => commands::calibrate_gray(&config, out),
        Command::Fit {
            config,
            out,
            overrides,
            debug_dumps,
        } => commands::fit(&config, out, &overrides, debug_dumps),
        Command::RenderPreview {
            bundle,
            curve,
            exposure,
            out,
            light_x,
            light_y,
            intensity,
        } => commands::render_preview(&bundle, &curve, exposure, &out, light_x, light_y, intensity),
        Command::Synth { out, seed, size, k } => capture::synth(&out, seed, size, k),
        Command::ClusterDebug { config, out, overrides } => commands::cluster_debug(&config, out, &overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
