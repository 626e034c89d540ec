use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qobserver_cli::{run, Args, RunConfig};

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::from_args(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            if let Some(e) = &out.failure {
                eprintln!("qobserver: {e}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("qobserver: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
