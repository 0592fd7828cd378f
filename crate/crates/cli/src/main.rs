use std::process::ExitCode;

use clap::Parser;
use turncue_cli::config::ConfigError;
use turncue_cli::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match turncue_cli::run(&cli) {
        Ok(o) if o.failed_sessions == 0 => ExitCode::SUCCESS,
        Ok(o) => {
            eprintln!(
                "error: {} session(s) failed; see errors.csv under {}",
                o.failed_sessions,
                o.run_dir.display()
            );
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
