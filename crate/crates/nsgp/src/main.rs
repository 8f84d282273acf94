use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = nsgp::cli::Cli::parse();
    match nsgp::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
