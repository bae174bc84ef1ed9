use std::panic;
use std::process::ExitCode;

use tsmcf::cli::{run, EXIT_INTERNAL};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = panic::catch_unwind(|| run(std::env::args_os(), &mut std::io::stdout().lock()))
        .unwrap_or(EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
