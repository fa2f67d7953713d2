use std::process::ExitCode;

fn main() -> ExitCode {
    // logs on stderr; stdout carries data only
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Ok(raw) = std::env::var("CP_WALD_THREADS") {
        match raw.parse::<usize>() {
            Ok(t) if t >= 1 => {
                // ignore failure: a pool may already exist in-process
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("usage error: CP_WALD_THREADS must be a positive integer, got {raw:?}");
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(cp_wald::cli::run_from(std::env::args_os()) as u8)
}
