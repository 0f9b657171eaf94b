use std::process::ExitCode;

fn main() -> ExitCode {
    zipftok::cli::main_entry()
}
