use std::process::ExitCode;

fn main() -> ExitCode {
    ehpc::cli::run()
}
