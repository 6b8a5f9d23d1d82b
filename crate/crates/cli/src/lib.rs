//! Command-line front end: dataset generation, splitting, training,
//! evaluation, analytic baselines and preset sweeps.
//!
//! Exit codes are 0 on success, 1 for runtime or data errors and 2 for usage
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use cew_core::dataset::Sampling;
use cew_core::eval::Witness;
use cew_core::model::TrainConfig;
use cew_core::SystemKind;
use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod manifest;

pub use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cew_core::Error> for CliError {
    fn from(e: cew_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "cew", version, about = "Collective entanglement witness experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SamplingArg {
    Balanced,
    Natural,
}

#[derive(clap::Args, Debug)]
pub struct TrainFlags {
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 200)]
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    /// Seed for weight initialization and mini-batch shuffling.
    #[arg(long = "train-seed", default_value_t = 0)]
    pub train_seed: u64,
}

impl TrainFlags {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.train_seed,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample labeled states and write their feature vectors.
    Gen {
        #[arg(long)]
        kind: SystemKind,
        /// Built-in preset name (B1, B10, ...) or a pair list such as 1-1,2-3.
        #[arg(long)]
        preset: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "balanced")]
        sampling: SamplingArg,
    },
    /// Stratified split of a dataset into training, validation and test files.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// Record counts for training, validation and test.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Writes PREFIX.train.csv, PREFIX.val.csv and PREFIX.test.csv.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Fit the network to the Negativity labels of a training file.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// ROC curve of a model on a test file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// ROC table output.
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG rendering of the curve.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Sensitivity and false-positive rate of the analytic witnesses.
    Baselines {
        #[arg(long)]
        kind: SystemKind,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// negativity, chsh or fef; all applicable witnesses when omitted.
        #[arg(long)]
        witness: Option<Witness>,
    },
    /// Train and evaluate one model per preset on shared splits.
    Sweep {
        #[arg(long)]
        kind: SystemKind,
        /// Presets to compare, e.g. --preset B1 B3 B5.
        #[arg(long = "preset", num_args = 1.., required = true)]
        presets: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = commands::default_sizes())]
        sizes: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also render each ROC curve as SVG.
        #[arg(long)]
        svg: bool,
        #[command(flatten)]
        flags: TrainFlags,
    },
}

fn sizes3(v: &[usize]) -> Result<[usize; 3], CliError> {
    v.try_into()
        .map_err(|_| CliError::Usage(format!("expected three sizes, got {}", v.len())))
}

/// Runs a parsed command, writing its standard-output report to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            kind,
            preset,
            n,
            seed,
            out: path,
            sampling,
        } => commands::gen(
            &commands::GenArgs {
                kind,
                preset,
                n,
                seed,
                out: path,
                sampling: match sampling {
                    SamplingArg::Balanced => Sampling::Balanced,
                    SamplingArg::Natural => Sampling::Natural,
                },
            },
            out,
        ),
        Command::Split {
            input,
            sizes,
            out_prefix,
        } => commands::split(
            &commands::SplitArgs {
                input,
                sizes: sizes3(&sizes)?,
                out_prefix,
            },
            out,
        ),
        Command::Train {
            train,
            val,
            out: path,
            flags,
        } => commands::train(
            &commands::TrainArgs {
                train,
                val,
                out: path,
                config: flags.config(),
            },
            out,
        ),
        Command::Eval {
            model,
            test,
            out: path,
            svg,
        } => commands::eval(
            &commands::EvalArgs {
                model,
                test,
                out: path,
                svg,
            },
            out,
        ),
        Command::Baselines { kind, n, seed, witness } => {
            commands::baselines(&commands::BaselinesArgs { kind, n, seed, witness }, out)
        }
        Command::Sweep {
            kind,
            presets,
            sizes,
            seed,
            out_dir,
            svg,
            flags,
        } => commands::sweep(
            &commands::SweepArgs {
                kind,
                presets,
                sizes: sizes3(&sizes)?,
                seed,
                out_dir,
                config: flags.config(),
                svg,
            },
            out,
        )
        .map(|_| ()),
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
