use std::process::ExitCode;

use clap::Parser;
use fovtopp::cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FOVTOPP_LOG", "error")).init();
    let config = RunConfig::from(Cli::parse());
    let outcome = run(&config);
    println!("{}", outcome.summary);
    ExitCode::from(outcome.code)
}
