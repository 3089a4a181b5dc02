//! Library side of the `recode` binary, so commands can be driven from tests.

pub mod commands;
pub mod options;

pub use commands::{cmd_cost, cmd_dataset, cmd_run, cmd_sweep, BatchSummary, EpisodeResult};
pub use options::{Cli, Command, RunSpec};

/// A failure with its exit status: 2 for bad usage, 1 for runtime problems.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Execute a parsed command line, writing the report to `out`.
pub fn dispatch(cli: &Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => cmd_run(&args.resolve()?, out).and_then(|s| s.check()),
        Command::Sweep(args) => cmd_sweep(args, out),
        Command::Dataset(args) => cmd_dataset(&args.trace_dir, args.percentile, &args.out, out).map(|_| ()),
        Command::Cost(args) => cmd_cost(&args.trace_dir, args.price_in, args.price_out, out).map(|_| ()),
    }
}
