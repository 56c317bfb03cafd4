use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spatialize_core::wav::SampleFormat;

/// Mono-to-binaural rendering, pseudo-pair dataset generation and binaural
/// evaluation metrics.
#[derive(Debug, Parser)]
#[command(name = "spatialize", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a mono WAV to a binaural WAV at a given direction.
    Render(RenderArgs),
    /// Generate a seeded dataset of pseudo visual-stereo pairs.
    Dataset(DatasetArgs),
    /// Score a predicted binaural WAV against ground truth.
    Eval(EvalArgs),
    /// Render with all three decoders and compare them.
    CompareDecoders(CompareArgs),
    /// Write a synthetic horizontal-ring HRIR pack.
    HrirSynth(HrirSynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Decoder {
    Wy,
    Hrir,
    AmbisonicHrir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Float32,
    Pcm16,
}

impl From<Format> for SampleFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Float32 => SampleFormat::Float32,
            Format::Pcm16 => SampleFormat::Pcm16,
        }
    }
}

/// Source direction, either as angles or as a normalized image position.
#[derive(Debug, Args)]
pub struct DirectionArgs {
    /// Azimuth in degrees, positive to the left.
    #[arg(long, allow_negative_numbers = true, required_unless_present = "pixel", conflicts_with = "pixel")]
    pub azimuth_deg: Option<f64>,
    /// Elevation in degrees, positive up.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0, conflicts_with = "pixel")]
    pub elevation_deg: f64,
    /// Normalized image coordinates in [-1, 1], u to the right, v up.
    #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true)]
    pub pixel: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Mono input WAV.
    pub input: PathBuf,
    /// Stereo output WAV.
    pub output: PathBuf,
    #[command(flatten)]
    pub direction: DirectionArgs,
    #[arg(long, value_enum, default_value_t = Decoder::AmbisonicHrir)]
    pub decoder: Decoder,
    /// HRIR pack directory (with index.json). Defaults to a synthetic pack.
    #[arg(long)]
    pub hrir_pack: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// JSON config. Relative paths inside it resolve against its directory.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of scenes.
    #[arg(long)]
    pub count: Option<usize>,
    /// Override the K = 1, 2, 3 probabilities.
    #[arg(long, num_args = 3, value_names = ["P1", "P2", "P3"])]
    pub ratios: Option<Vec<f64>>,
    /// Override the output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth stereo WAV.
    pub gt: PathBuf,
    /// Predicted stereo WAV.
    pub pred: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: PathBuf,
    /// Evaluation window in seconds.
    #[arg(long, default_value_t = spatialize_core::metrics::DEFAULT_WINDOW_S)]
    pub window_s: f64,
    /// Window hop in seconds.
    #[arg(long, default_value_t = spatialize_core::metrics::DEFAULT_HOP_S)]
    pub hop_s: f64,
    /// Score the whole signal as one window.
    #[arg(long)]
    pub whole_signal: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Mono input WAV.
    pub input: PathBuf,
    /// Directory for wy.wav, hrir.wav, ambisonic_hrir.wav and distances.json.
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub direction: DirectionArgs,
    #[arg(long)]
    pub hrir_pack: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct HrirSynthArgs {
    /// Output directory for the pack.
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 72, value_parser = clap::value_parser!(u32).range(1..))]
    pub n_azimuths: u32,
    /// Head radius in meters.
    #[arg(long, default_value_t = 0.0875, value_parser = positive)]
    pub head_radius: f64,
    /// Level difference at +/-90 degrees, in dB.
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub ild_db: f64,
    #[arg(long, default_value_t = spatialize_core::DEFAULT_SAMPLE_RATE, value_parser = clap::value_parser!(u32).range(1..))]
    pub sample_rate: u32,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}
