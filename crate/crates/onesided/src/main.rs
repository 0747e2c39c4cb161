use std::process::ExitCode;

fn main() -> ExitCode {
    let cfg = match onesided::parse_args(std::env::args_os().skip(1)) {
        Ok(cfg) => cfg,
        Err(e) => e.exit(),
    };
    ExitCode::from(onesided::run(&cfg) as u8)
}
