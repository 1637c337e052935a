use std::process::ExitCode;

use clap::Parser;
use tunnelkit::cli::{self, Cli, EXIT_CONFIG, EXIT_NUMERICAL};

fn main() -> ExitCode {
    let args = Cli::parse();
    match cli::run(&args) {
        Ok(out) => {
            if args.out.is_none() {
                print!("{}", out.text);
            }
            if out.failures > 0 {
                eprintln!("warning: {} rows failed; see the status column", out.failures);
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERICAL })
        }
    }
}
