use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fracta::cli_io::run_cli(std::env::args()))
}
