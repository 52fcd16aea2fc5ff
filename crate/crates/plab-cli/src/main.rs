use std::process::ExitCode;

use clap::Parser;
use plab_cli::{emit, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("plab: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&report, &cli) {
        eprintln!("plab: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(report.exit_code() as u8)
}
