use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = rdkf_cli::Cli::parse();
    match rdkf_cli::run(&cli) {
        Ok(files) => {
            for file in files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rdkf: {e}");
            ExitCode::FAILURE
        }
    }
}
