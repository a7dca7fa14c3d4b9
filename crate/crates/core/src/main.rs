use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use hybseg::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out).and_then(|()| Ok(out.flush()?)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hybseg: {e:#}");
            ExitCode::FAILURE
        }
    }
}
