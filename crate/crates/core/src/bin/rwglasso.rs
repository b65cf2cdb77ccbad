use std::process::ExitCode;

fn main() -> ExitCode {
    match reweighted_glasso::cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
