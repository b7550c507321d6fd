use clap::Parser;
use qds_cli::{error::EXIT_CONFIG, run, Cli};

fn main() {
    // Usage errors share exit code 1 with configuration errors; clap's default of 2 would
    // collide with the infeasible code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&cli));
}
