use std::process::ExitCode;

fn main() -> ExitCode {
    schwarz1d_cli::run(std::env::args_os())
}
