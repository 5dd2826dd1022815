use clap::Parser;
use magtrap::cli::{run_cli, CliArgs};

fn main() {
    let args = match CliArgs::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    std::process::exit(run_cli(&args));
}
