use std::process::ExitCode;

use clap::Parser;

use povm_core::cli::{init_logger, run, Cli};

fn main() -> ExitCode {
    init_logger();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
