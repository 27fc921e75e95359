use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match rabbithole_cli::run_from(std::env::args_os(), &mut out) {
        Ok(code) => {
            let _ = out.flush();
            ExitCode::from(code.clamp(0, 255) as u8)
        }
        Err(e) => match e.downcast_ref::<clap::Error>() {
            Some(clap_err) => {
                let _ = clap_err.print();
                ExitCode::from(if clap_err.use_stderr() { 2 } else { 0 })
            }
            None => {
                let _ = out.flush();
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
