use std::process::ExitCode;

fn main() -> ExitCode {
    miret::cli::run()
}
