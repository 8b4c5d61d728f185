use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdin = io::stdin();
    let mut stdin = stdin.lock();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = hmc_efb_cli::run(std::env::args_os(), &mut stdin, &mut out, &mut io::stderr());
    if out.flush().is_err() && code == 0 {
        return ExitCode::from(hmc_efb_cli::EXIT_DATA as u8);
    }
    ExitCode::from(code as u8)
}
