mod args;
mod commands;
mod config;

use std::ffi::OsString;

use anyhow::Result;
use clap::Parser;

pub use args::{Cli, Command};
pub use commands::NonConvergence;

pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const GUARD: u8 = 3;
    pub const NON_CONVERGENCE: u8 = 4;
}

/// Exit status for an error, from the first recognizable cause.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<NonConvergence>() {
            return exit::NON_CONVERGENCE;
        }
        if let Some(e) = cause.downcast_ref::<bayesteach::Error>() {
            return match e {
                bayesteach::Error::Core(c) => core_code(c),
                bayesteach::Error::Io { .. } => exit::OTHER,
                _ => exit::CONFIG,
            };
        }
        if let Some(c) = cause.downcast_ref::<bayesteach_core::Error>() {
            return core_code(c);
        }
        if cause.is::<toml::de::Error>() {
            return exit::CONFIG;
        }
    }
    exit::OTHER
}

fn core_code(e: &bayesteach_core::Error) -> u8 {
    match e {
        bayesteach_core::Error::GuardExceeded { .. } => exit::GUARD,
        bayesteach_core::Error::AllWeightsZero => exit::OTHER,
        _ => exit::CONFIG,
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    let workers = match command {
        Command::Fit(a) => a.common.workers,
        Command::EstimatorCompare(a) => a.common.workers,
        Command::ScalingBench(a) => a.common.workers,
        Command::SimplexDensity(a) => a.common.workers,
        Command::LearnerError(a) => a.common.workers,
        Command::Teach(a) => a.common.workers,
        Command::Rank(a) => a.common.workers,
    };
    bayesteach::parallel::with_workers(workers, || match command {
        Command::Fit(a) => commands::fit(a),
        Command::EstimatorCompare(a) => commands::estimator_compare_cmd(a),
        Command::ScalingBench(a) => commands::scaling_bench_cmd(a),
        Command::SimplexDensity(a) => commands::simplex_density(a),
        Command::LearnerError(a) => commands::learner_error(a),
        Command::Teach(a) => commands::teach(a),
        Command::Rank(a) => commands::rank(a),
    })?
}

/// Parse, run and map the outcome to an exit status.
pub fn run(argv: Vec<OsString>) -> u8 {
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return exit::CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {}: {e:#}", cli.command.name());
            exit_code(&e)
        }
    }
}
