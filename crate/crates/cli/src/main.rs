use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rlemask_core::ErrorCategory;

mod codec;
mod commands;
mod render;
mod table;

/// Run-length tokenizer for segmentation masks.
#[derive(Debug, Parser)]
#[command(name = "rlemask", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Codec: a static scheme, a video scheme (3dc, 3df, tac, ltac), cw or iw.
    #[arg(long, global = true, default_value = "naive-mc")]
    pub scheme: String,
    /// Per-run scheme under video and structured codecs.
    #[arg(long, global = true)]
    pub base: Option<String>,
    /// Square mask side. Inputs of a different size are pooled down to it.
    #[arg(long, global = true)]
    pub mask_size: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    pub classes: u32,
    #[arg(long, global = true)]
    pub frames: Option<usize>,
    /// 1d or 2d start tokens.
    #[arg(long, global = true)]
    pub start_mode: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Flatten::Row)]
    pub flatten: Flatten,
    #[arg(long, global = true)]
    pub max_len: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub specials: u32,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub output_format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Flatten {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a mask (a frame directory for video codecs).
    Encode {
        input: PathBuf,
        /// Token file to write; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Emit runs (or instances) in a seeded random order.
        #[arg(long)]
        shuffle: bool,
    },
    /// Rebuild a mask from a token file.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Repair malformed sequences instead of rejecting them.
        #[arg(long)]
        lenient: bool,
    },
    /// Encode, decode and compare; exits non-zero on any mismatch.
    Roundtrip { inputs: Vec<PathBuf> },
    /// Vocabulary breakdown and frame-feasibility tables.
    Vocab {
        #[arg(long, default_value_t = rlemask_core::planner::DEFAULT_VOCAB_LIMIT)]
        limit: u64,
        /// Also print V for every video scheme with 1..=N frames.
        #[arg(long)]
        table: Option<u64>,
    },
    /// Sequence-length statistics over a dataset.
    Stats {
        inputs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<usize>,
        /// Schemes to compare; defaults to --scheme.
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
    },
    /// Cut a mask into square windows and write a manifest.
    Patchify {
        input: PathBuf,
        #[arg(long)]
        patch: usize,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Apply a seeded random rotation/flip to every patch.
        #[arg(long)]
        augment: bool,
    },
    /// Stitch patches listed in a manifest back together.
    Recompose {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "vote")]
        combiner: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Segmentation metrics of predictions against ground truth.
    Metrics {
        gt: PathBuf,
        pred: PathBuf,
        /// Leave background out of the class means.
        #[arg(long)]
        foreground_only: bool,
        /// Also report the concentration error of this class.
        #[arg(long)]
        concentration_class: Option<u32>,
    },
    /// Quality lost by pooling masks down to --size and replicating back.
    SubsampleQuality {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        foreground_only: bool,
    },
    /// Corrupt token sequences and measure the damage.
    Noise {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = CorruptionKind::DropRun)]
        corruption: CorruptionKind,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        radius: u32,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Render a mask as a colour PNG, optionally outlining its runs.
    Viz {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: u32,
        #[arg(long)]
        overlay: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorruptionKind {
    DropRun,
    DropToken,
    Perturb,
}

/// Raised when a round trip does not reproduce its input.
#[derive(Debug)]
pub struct Mismatch(pub usize);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} input(s) did not survive the round trip", self.0)
    }
}

impl std::error::Error for Mismatch {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<rlemask_core::Error>() {
            return match e.category() {
                ErrorCategory::Validation => 1,
                ErrorCategory::Io => 2,
                ErrorCategory::Capacity => 3,
            };
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
