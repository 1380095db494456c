use std::process::ExitCode;

fn main() -> ExitCode {
    nhresponse::cli::run()
}
