use std::process::ExitCode;

fn main() -> ExitCode {
    ehlcp::cli::run(std::env::args_os())
}
