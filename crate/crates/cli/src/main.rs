use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    tremble_cli::main_with(std::env::args_os(), &mut stdout.lock())
}
