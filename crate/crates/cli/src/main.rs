//! `signkit`: synthesize data, train, evaluate and export features for the
//! sign recognition models in `signkit-core`.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "signkit", version, about = "Skeletal and hand-shape sign recognition toolkit")]
struct Cli {
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Any of them may also be set in the
/// `--config` file; a flag given on the command line wins.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Dataset root (<root>/<subject>/<class>/<n>.skel.json).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flat key = value file; keys are long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Evaluation folds run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// ai-lstm | spatial-ai-lstm | cnn3d | max-fusion | baseline
    #[arg(long, default_value = "ai-lstm")]
    pub model: String,
    /// Training epochs.
    #[arg(long, default_value_t = 250)]
    pub epochs: usize,
    /// Learning rate [default: 5e-5 for LSTM models, 1e-5 for cnn3d and max-fusion, 1e-2 for baseline]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Minibatch size.
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// LSTM state size.
    #[arg(long, default_value_t = 50)]
    pub state_size: usize,
    /// Skeletal frames after resampling.
    #[arg(long, default_value_t = 20)]
    pub frames: usize,
    /// Frames per hand volume.
    #[arg(long, default_value_t = 15)]
    pub hand_frames: usize,
    /// Hand crop side in source pixels.
    #[arg(long, default_value_t = 100)]
    pub patch: usize,
    /// Hand crop side after resizing.
    #[arg(long, default_value_t = 32)]
    pub patch_out: usize,
}

#[derive(Args, Clone, Debug)]
pub struct TrainArgs {
    /// LSTM layers per axis.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// L2 weight penalty coefficient.
    #[arg(long, default_value_t = 0.008)]
    pub l2_beta: f64,
    /// Dropout keep probability.
    #[arg(long, default_value_t = 0.5)]
    pub dropout_keep: f64,
    /// Clip gradients to this global norm [default: off]
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-subject dataset.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 4)]
        subjects: usize,
        #[arg(long, default_value_t = 4)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 30)]
        min_frames: usize,
        #[arg(long, default_value_t = 90)]
        max_frames: usize,
        /// Coordinate noise in meters.
        #[arg(long, default_value_t = 0.005)]
        noise_sigma: f64,
        /// Classes sharing one motion, e.g. "0-1,2-3".
        #[arg(long, default_value = "")]
        twin_pairs: String,
        /// Classes differing only in the right arm's offset, e.g. "4-5".
        #[arg(long, default_value = "")]
        relation_pairs: String,
        /// Render hand-patch volumes.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        hands: bool,
    },
    /// Train one model and write a checkpoint plus its history.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Evaluate checkpoints or run a retraining protocol.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        /// Model checkpoint; give two to fuse them by element-wise maximum.
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        /// single-split | cross-subject | adaptation
        #[arg(long, default_value = "single-split")]
        protocol: String,
        /// Test subject (single-split: default all samples; adaptation: default first subject).
        #[arg(long)]
        subject: Option<String>,
        /// Adaptation fractions of the test subject's data.
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5")]
        fractions: Vec<f64>,
    },
    /// Split a continuous skeleton stream into sign segments.
    Segment {
        #[command(flatten)]
        common: Common,
        /// JSON array of skeleton frames.
        #[arg(long)]
        stream: Option<PathBuf>,
        /// Smoothed wrist speed threshold, meters per frame.
        #[arg(long, default_value_t = 0.01)]
        velocity_threshold: f64,
        /// Moving-average width (odd).
        #[arg(long, default_value_t = 5)]
        smoothing_window: usize,
        #[arg(long, default_value_t = 10)]
        min_segment_len: usize,
        #[arg(long, default_value_t = 8)]
        merge_gap: usize,
    },
    /// Export the 126 handcrafted statistics per sample as CSV.
    Features {
        #[command(flatten)]
        common: Common,
    },
    /// Export skeletal embeddings of an LSTM-family checkpoint as CSV.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();
}

fn main() -> ExitCode {
    let matches = Cli::command().mut_subcommands(|c| c.args_override_self(true)).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    init_logging(cli.verbose, cli.quiet);
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let result = config::Settings::new(sub).and_then(|s| match name {
        "synth" => commands::synth(&s),
        "train" => commands::train(&s),
        "eval" => commands::eval(&s),
        "segment" => commands::segment(&s),
        "features" => commands::features(&s),
        "embed" => commands::embed(&s),
        other => unreachable!("unhandled subcommand {other}"),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
