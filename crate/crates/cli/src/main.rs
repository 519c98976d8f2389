//! `derham-qi`: mollification, commutation and quasi-interpolation studies.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "derham-qi", version, about = "Commuting mollifiers and quasi-interpolation on the lowest-order 3D complex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// L2 error of each mollifier against delta
    MollifyRate(Flags),
    /// pointwise commutation of the mollifiers with grad, curl and div
    CommuteCheck(Flags),
    /// trace pairings of zero-extension mollifiers
    TraceCheck(Flags),
    /// calibrate epsilon and tabulate quasi-interpolation errors
    QuasiInterp(Flags),
    /// projection defect on random discrete fields
    ProjectCheck(Flags),
    /// discrete Poincare constants of the curl
    Poincare(Flags),
    /// mesh counts and sizes
    MeshInfo(Flags),
}

#[derive(Debug)]
pub enum AppError {
    /// Bad input; exit code 2.
    Validation(String),
    /// Numerical failure or violated invariant; exit code 1.
    Numerical(String),
}

impl From<derham_qi::Error> for AppError {
    fn from(e: derham_qi::Error) -> Self {
        use derham_qi::Error as E;
        match e {
            E::Numerical(_) | E::Calibration { .. } | E::Evaluation(_) | E::InclusionViolation { .. } => AppError::Numerical(e.to_string()),
            _ => AppError::Validation(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let (flags, cmd): (&Flags, fn(&RunConfig) -> Result<(), AppError>) = match &cli.command {
        Command::MollifyRate(f) => (f, commands::mollify_rate),
        Command::CommuteCheck(f) => (f, commands::commute_check),
        Command::TraceCheck(f) => (f, commands::trace_check),
        Command::QuasiInterp(f) => (f, commands::quasi_interp),
        Command::ProjectCheck(f) => (f, commands::project_check),
        Command::Poincare(f) => (f, commands::poincare),
        Command::MeshInfo(f) => (f, commands::mesh_info),
    };
    let cfg = RunConfig::resolve(flags)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::Validation(format!("cannot set thread count: {e}")))?;
    }
    cmd(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(AppError::Numerical(m)) => {
            eprintln!("failure: {m}");
            ExitCode::from(1)
        }
    }
}
