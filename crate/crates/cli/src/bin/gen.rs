use std::io;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = ctrlc::set_handler(|| INTERRUPTED.store(true, Ordering::Relaxed)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = streamgen_cli::gen::run(
        std::env::args_os(),
        &mut stdout.lock(),
        &mut stderr.lock(),
        &INTERRUPTED,
    );
    ExitCode::from(code as u8)
}
