use std::process::ExitCode;

fn main() -> ExitCode {
    wikigraph::cli::run()
}
