use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ura::cli::Cli::parse();
    match ura::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
