use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "diffusemix", version, about = "Label-preserving image augmentation")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Augment a class-per-directory dataset.
    Augment(AugmentArgs),
    /// Render a directory of procedural fractal images.
    Fractals(FractalsArgs),
    /// Write a contact sheet of every stage for one image.
    Preview(PreviewArgs),
    /// Augmentation overhead in percent from two measured times.
    Overhead(OverheadArgs),
    /// Check a manifest against the files it describes.
    Validate(ValidateArgs),
}

/// Every option is optional here so that a config file can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct AugmentArgs {
    /// TOML file whose keys mirror these flag names. Flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Dataset root with one subdirectory per class.
    #[arg(long, value_name = "DIR")]
    pub input: Option<PathBuf>,

    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Augmented images per source image [default: 1]
    #[arg(long)]
    pub m: Option<u32>,

    /// Fractal blending factor in [0, 1] [default: 0.2]
    #[arg(long)]
    pub lambda: Option<f32>,

    /// Run once per lambda in 0.1..=0.5, each into OUTPUT/lambda_<value>.
    #[arg(long, conflicts_with = "lambda")]
    pub lambda_sweep: bool,

    /// vertical | vertical_horizontal | full [default: full]
    #[arg(long, value_name = "SET")]
    pub mask_set: Option<String>,

    /// procedural | remote:<URL> [default: procedural]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,

    /// Generation strength in [0, 1], passed to the backend.
    #[arg(long)]
    pub strength: Option<f32>,

    /// Prompt file, one prompt per line; `#` starts a comment line.
    #[arg(long, value_name = "FILE")]
    pub prompts: Option<PathBuf>,

    /// dir:<path> | procedural:<count>[,seed=<n>] [default: procedural:100,seed=0]
    #[arg(long, value_name = "SPEC")]
    pub fractals: Option<String>,

    /// Worker threads [default: available parallelism]
    #[arg(long)]
    pub workers: Option<usize>,

    /// Generation cache directory [env: DIFFUSEMIX_CACHE]
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Retries for a remote backend after the first attempt [default: 2]
    #[arg(long)]
    pub retries: Option<u32>,

    /// Per-request timeout in seconds for a remote backend [default: 120]
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FractalsArgs {
    #[arg(long, default_value_t = 100)]
    pub count: usize,

    /// Side length in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: u32,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PreviewArgs {
    #[arg(long, value_name = "IMAGE")]
    pub input: PathBuf,

    /// Output PNG.
    #[arg(long, value_name = "PNG")]
    pub output: PathBuf,

    /// Prompt from the library [default: its first entry]
    #[arg(long)]
    pub prompt: Option<String>,

    #[arg(long, default_value = "left_on")]
    pub mask: String,

    /// Fractal id or index within the fractal source [default: 0]
    #[arg(long)]
    pub fractal: Option<String>,

    #[arg(long, default_value_t = 0.2)]
    pub lambda: f32,

    #[arg(long, default_value = "procedural")]
    pub backend: String,

    #[arg(long)]
    pub strength: Option<f32>,

    #[arg(long, value_name = "FILE")]
    pub prompts: Option<PathBuf>,

    #[arg(long, default_value = "procedural:100,seed=0")]
    pub fractals: String,

    /// Pixels between panels.
    #[arg(long, default_value_t = 4)]
    pub gutter: u32,

    #[arg(long, default_value_t = 2)]
    pub retries: u32,

    #[arg(long, default_value_t = 120.0)]
    pub timeout: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OverheadArgs {
    /// Wall time with augmentation.
    #[arg(long, allow_negative_numbers = true)]
    pub t_aug: f64,

    /// Wall time of the vanilla baseline.
    #[arg(long, allow_negative_numbers = true)]
    pub t_van: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
}
