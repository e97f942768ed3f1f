//! Command-line front end: index analysis, structure classification, the two
//! solvers, and end-to-end reproduction of the reference experiments.

pub mod commands;
pub mod expr;
pub mod output;
pub mod problem_file;
pub mod reproduce;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rdindex_core::catalog;
use rdindex_core::problem::Problem;
use thiserror::Error;

use problem_file::{FileError, ProblemFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown problem `{0}` (not a built-in name or a readable file)")]
    UnknownProblem(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Core(#[from] rdindex_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownProblem(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rdindex", version, about = "Index analysis and solvers for semi-nonlinear IAEs and DAEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in examples.
    List,
    /// Rank-degree index chain and initial-value consistency.
    Analyze(Common),
    /// Structure classification and critical points along a trajectory.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Radius of the perturbation ball around the trajectory.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fixed-step BDF integration of a DAE.
    SolveDae {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long, default_value_t = 1)]
        order: u8,
    },
    /// Piecewise-polynomial collocation of an IAE.
    SolveIae {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.025)]
        h: f64,
        /// Collocation parameters in [0, 1], strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "0,0.7,0.9")]
        c: Vec<f64>,
    },
    /// Re-run a reference experiment and write `figN.csv` and `figN_summary.json`.
    Reproduce {
        target: Figure,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Built-in example name or path to a JSON problem file.
    #[arg(value_name = "PROBLEM", required_unless_present = "problem_flag")]
    pub problem: Option<String>,
    #[arg(long = "problem", value_name = "PROBLEM", conflicts_with = "problem")]
    pub problem_flag: Option<String>,
    /// Sub-interval `a b` of the problem domain (the whole domain by default).
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Output directory for solution and diagnostics files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

impl Common {
    pub fn problem_name(&self) -> &str {
        self.problem.as_deref().or(self.problem_flag.as_deref()).unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    All,
}

/// A problem together with the name it was requested under.
pub struct Loaded {
    pub name: String,
    pub problem: Problem,
}

/// Built-in name first, then a problem file path.
pub fn resolve(name: &str) -> Result<Loaded, CliError> {
    if catalog::NAMES.contains(&name) {
        return Ok(Loaded { name: name.to_string(), problem: catalog::example(name)? });
    }
    let path = PathBuf::from(name);
    if !path.is_file() {
        return Err(CliError::UnknownProblem(name.to_string()));
    }
    let file = ProblemFile::load(&path)?;
    let stem = file
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "problem".into());
    Ok(Loaded { name: stem, problem: file.build()? })
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable output to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
