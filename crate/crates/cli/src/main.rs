mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;
use resolvent_geometry::GeometryError;

use crate::args::Cli;

/// Exit status for a library error: 1 bad input, 2 domain violation,
/// 3 numerical non-convergence.
fn exit_code(e: &GeometryError) -> u8 {
    match e {
        GeometryError::SingularPoint { .. } | GeometryError::OutOfDomain(_) => 2,
        GeometryError::NonConvergence(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = cli.command.common().clone();
    if !(common.tol_sing > 0.0 && common.tol_quad > 0.0) {
        eprintln!("resgeom: tolerances must be positive");
        return ExitCode::from(1);
    }
    let report = match commands::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("resgeom {}: {e}", cli.command.name());
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = report.write(&common) {
        eprintln!("resgeom {}: cannot write output: {e}", cli.command.name());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
