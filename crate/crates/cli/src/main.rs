use std::process::ExitCode;

use clap::Parser;
use offbranch_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match offbranch_cli::run(&cli) {
        Ok(report) => ExitCode::from(report.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
