use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(termrisk_cli::run(std::env::args_os()))
}
