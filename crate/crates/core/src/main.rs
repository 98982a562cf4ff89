use std::process::ExitCode;

use clap::Parser;
use qoct::cli::{configure_threads, run, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_ENV).ok();
    match configure_threads(threads.as_deref()).and_then(|_| run(&cli)) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
