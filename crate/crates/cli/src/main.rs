use std::process::ExitCode;

use clap::Parser;
use diakit_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(e) = f.error {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(f.code)
        }
    }
}
