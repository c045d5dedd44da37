//! Command implementations behind the `rfdi` binary.

pub mod args;
pub mod evaluate;
pub mod report;
pub mod select;
pub mod simulate;

use std::io::Write;
use std::path::Path;

use anyhow::Context;

pub use args::{Cli, Command};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "RFDI_THREADS";

/// Thread cap from `RFDI_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a count"))?;
            anyhow::ensure!(n > 0, "{THREADS_ENV} must be positive");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Write `text` to `path`, or stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").context("writing to stdout")
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = threads_from_env()?;
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Select(a) => select::run(&a, threads),
        Command::Evaluate(a) => evaluate::run(&a, threads),
    }
}
