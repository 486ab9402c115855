use std::process::ExitCode;

fn main() -> ExitCode {
    ehcr::cli::main_with_args(std::env::args_os())
}
