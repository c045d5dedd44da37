use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = rfdi_cli::Cli::parse();
    match rfdi_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
