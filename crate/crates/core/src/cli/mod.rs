//! The `gradmech` command line: problem files in, reports and data files out.
//!
//! Exit codes: 0 success, 1 numerical or verification failure, 2 usage or
//! config error. A bad config never produces partial output.

mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, Format, Problem, ProblemConfig, ProblemKind};
pub use report::{RunReport, Status};

use crate::sampling::DEFAULT_SEED;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gradmech", version, about = "Higher-order Euler-Lagrange equations on Lie algebroids and minimal-surface strings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Algebroid axioms and Lagrangian homogeneity.
    Check(CommonArgs),
    /// Momenta and Euler-Lagrange equations, with oracle cross-checks.
    Derive(CommonArgs),
    /// Integrate the explicit equations and log conserved quantities.
    Simulate(CommonArgs),
    /// Solve the minimal-surface equation for given boundary values.
    Plateau(CommonArgs),
    /// Euler-Lagrange residual of a string Lagrangian on an imported surface.
    Residual(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Seed for every random sample drawn by the checks.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (overrides `io.out_dir`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Format of data files (overrides `io.format`).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print the equations as LaTeX instead of the JSON report.
    #[arg(long)]
    pub latex: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Derive(_) => "derive",
            Command::Simulate(_) => "simulate",
            Command::Plateau(_) => "plateau",
            Command::Residual(_) => "residual",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Check(a) | Command::Derive(a) | Command::Simulate(a) | Command::Plateau(a) | Command::Residual(a) => a,
        }
    }
}

/// Settings shared by all commands after flags and config are merged.
#[derive(Debug, Clone)]
pub(crate) struct Settings {
    pub seed: u64,
    /// `None` for commands that only print unless asked to write.
    pub out_dir: Option<PathBuf>,
    pub format: Format,
    pub latex: bool,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    execute(&cli.command, stdout, stderr)
}

pub fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = command.args();
    let problem = match ProblemConfig::load(&args.config).and_then(|c| {
        let dir = args.config.parent().map(PathBuf::from).unwrap_or_default();
        c.validate(&dir)
    }) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let writes_data = !matches!(command, Command::Check(_) | Command::Derive(_));
    let out_dir = args
        .out
        .clone()
        .or_else(|| problem.out_dir.clone())
        .or_else(|| writes_data.then(|| PathBuf::from(".")));
    let settings = Settings {
        seed: args.seed.unwrap_or(DEFAULT_SEED),
        out_dir,
        format: args.format.or(problem.format).unwrap_or(Format::Csv),
        latex: args.latex,
    };
    let outcome = match command {
        Command::Check(_) => commands::check(&problem, &settings),
        Command::Derive(_) => commands::derive(&problem, &settings),
        Command::Simulate(_) => commands::simulate(&problem, &settings),
        Command::Plateau(_) => commands::plateau(&problem, &settings),
        Command::Residual(_) => commands::residual(&problem, &settings),
    };
    match outcome {
        Ok(output) => {
            let _ = stdout.write_all(output.stdout.as_bytes());
            if output.report.passed() {
                EXIT_OK
            } else {
                if let Some(e) = &output.report.error {
                    let _ = writeln!(stderr, "{}: {e}", command.name());
                }
                EXIT_FAILURE
            }
        }
        Err(commands::CommandError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(commands::CommandError::Io(e)) => {
            let _ = writeln!(stderr, "error: writing output: {e}");
            EXIT_FAILURE
        }
    }
}
