use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use llcurve::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok(mut report) => {
            if cli.timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            match serde_json::to_string_pretty(&report.to_json()) {
                Ok(text) => {
                    // a closed pipe downstream is not our failure
                    let _ = writeln!(std::io::stdout().lock(), "{text}");
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: failed checks: {:?}", report.checks.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k).collect::<Vec<_>>());
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
