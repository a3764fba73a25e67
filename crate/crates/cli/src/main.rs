use std::process::ExitCode;

use clap::Parser;

use renoir_cli::commands::{exit_code, run_with_threads, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run_with_threads(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result))
}
