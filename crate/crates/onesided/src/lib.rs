//! Std front end for `onesided-core`: a rayon executor, declarative model
//! files, serialized reports and the `onesided` command line.
//!
//! Exit codes: 0 success, 1 printed-table deviation (`example`), 2 usage
//! error, 3 module error.

pub mod cli;
pub mod commands;
pub mod config;
pub mod exec;
pub mod report;

use std::io::Write;

pub use cli::{parse_args, Command, ModelSource, RunConfig, ScoreChoice};
pub use commands::{execute, Outcome, RunError};
pub use exec::Rayon;
pub use report::{Format, Report};

/// Exit status for errors raised by the numerical modules.
pub const EXIT_MODULE_ERROR: i32 = 3;

/// Runs `cfg` on a rayon pool sized by `--workers`, then the environment,
/// and writes the report to `--output` or standard output. Errors go to
/// standard error. Returns the exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    match try_run(cfg) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_MODULE_ERROR
        }
    }
}

fn try_run(cfg: &RunConfig) -> Result<i32, RunError> {
    let exec = match cfg.workers {
        Some(w) => Rayon::new(w)?,
        None => Rayon::from_env()?,
    };
    let outcome = execute(cfg, &exec)?;
    let text = outcome.report.render(cfg.format);
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(outcome.status)
}
