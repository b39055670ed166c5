// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
mod args;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Warnings;
use qwf_core::{ErrorKind, QwfError};

#[derive(Debug)]
pub enum CliError {
    Core(QwfError),
    Usage(String),
    Io(String),
}

impl From<QwfError> for CliError {
    fn from(e: QwfError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Model => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Io(s) => write!(f, "i/o error: {s}"),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QWF_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!("QWF_THREADS must be a positive integer, got '{v}'"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut warn = Warnings::new(cli.strict);
    let (name, report) = match &cli.command {
        Command::Evolve(a) => ("evolve", commands::evolve_cmd(a, &mut warn)?),
        Command::Qfim(a) => ("qfim", commands::qfim_cmd(a, &mut warn)?),
        Command::Bounds(a) => ("bounds", commands::bounds_cmd(a, &mut warn)?),
        Command::Sweep(a) => ("sweep", commands::sweep_cmd(a)?),
        Command::Case(a) => ("case", commands::case_cmd(a, &mut warn)?),
        Command::Estimate(a) => ("estimate", commands::estimate_cmd(a, &mut warn)?),
    };
    let stem = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("qwf-{name}")));
    let (json, csv) = output::write_outputs(&stem, cli, &warn.list, &report.result, &report.csv)?;
    for w in &warn.list {
        eprintln!("warning: {w}");
    }
    println!("{}", report.summary);
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
