use std::process::ExitCode;

use clap::Parser;
use prefixsim::experiment::{run, ExperimentConfig};

fn main() -> ExitCode {
    let config = ExperimentConfig::parse();
    let record = match run(&config) {
        Ok(record) => record,
        Err(e) => {
            eprintln!("prefixsim: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = config.emit(&record) {
        eprintln!("prefixsim: {e}");
        return ExitCode::from(2);
    }
    for check in record.checks.iter().filter(|c| !c.passed) {
        eprintln!("prefixsim: check failed: {}", check.name);
    }
    if record.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
