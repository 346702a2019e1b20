use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use chebpint::args::Cli;
use chebpint::error::CliResult;
use chebpint::experiments::run;
use chebpint::report::write_report;
use clap::error::ErrorKind;
use clap::Parser;

fn execute(cli: &Cli) -> CliResult<()> {
    let report = run(cli)?;
    match &cli.out {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            write_report(&report, cli.format, &mut out)?;
            out.flush()?;
        }
        None => write_report(&report, cli.format, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
