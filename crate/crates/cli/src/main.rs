use std::process::ExitCode;

use clap::Parser;
use corrlearn_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corrlearn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
