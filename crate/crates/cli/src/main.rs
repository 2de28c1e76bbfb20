use std::process::ExitCode;

fn main() -> ExitCode {
    bestanswer_cli::run()
}
