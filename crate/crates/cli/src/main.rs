use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(riskspace_cli::run(std::env::args_os()))
}
