use std::process::ExitCode;

fn main() -> ExitCode {
    graver_mcmc::cli::main_with_args(std::env::args_os())
}
