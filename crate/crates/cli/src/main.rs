use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use phonon_bjj_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            let _ = std::io::stdout().flush();
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            if outcome.inconclusive.is_empty() {
                ExitCode::SUCCESS
            } else {
                for m in &outcome.inconclusive {
                    eprintln!("inconclusive: {m}");
                }
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
