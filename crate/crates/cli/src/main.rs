use std::process::ExitCode;

fn main() -> ExitCode {
    treenlg_cli::run(std::env::args_os())
}
