use std::process::ExitCode;

use clap::Parser;
use twisted_dirac_cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(report) => {
            let status = if report.verdict.passed { "passed" } else { "failed" };
            println!("{} run complete, verdict {status}", report.kind.name());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
