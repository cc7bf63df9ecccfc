use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deepjam_core::TemplateMode;

#[derive(Debug, Parser)]
#[command(name = "deepjam", version, about = "Joint elastic alignment of multivariate quasi-periodic functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated dataset with its ground truth.
    Simulate(SimulateArgs),
    /// Train the warping network on a dataset and align the training subjects.
    Train(TrainArgs),
    /// Align a dataset with a trained network.
    Align(AlignArgs),
    /// Recompute the templates of a result directory.
    Template(TemplateArgs),
    /// Write variance tables and plot data for a result directory.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Named preset: scenario1, scenario2, ecg, desk-scenario1, desk-scenario2 or smoke.
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML file whose keys override the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Amplitude,
    Warp,
}

impl From<Mode> for TemplateMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Amplitude => TemplateMode::Amplitude,
            Mode::Warp => TemplateMode::Warp,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub scenario: Option<u32>,
    /// Dataset directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Result directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of outer iterations, overriding the configuration.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Subjects to train on: all, train, tune, validation or test.
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Checkpoint file, or a result directory containing one.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Result directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Subjects to align; defaults to the test split when there is one.
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long, value_enum, default_value = "amplitude")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct TemplateArgs {
    /// Result directory, updated in place.
    #[arg(long)]
    pub out: PathBuf,
    /// Subject-template mode; defaults to the one the directory was made with.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Result directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the tables and plot data; defaults to the result directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
