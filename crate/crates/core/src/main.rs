use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = sphere_cr::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
