use std::process::ExitCode;

use clap::Parser;
use fda_waveopt_cli::cli::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FDA_WAVEOPT_LOG", "warn")).init();
    let cli = Cli::parse();
    match fda_waveopt_cli::run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
