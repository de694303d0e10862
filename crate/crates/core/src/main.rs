use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(greenfem::cli::run_command(std::env::args_os()))
}
