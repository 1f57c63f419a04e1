use std::process::ExitCode;

use clap::Parser;
use odcal::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let code = match cli::run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
