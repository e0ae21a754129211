//! Front end for the buffer model, simulator and testbed.

pub mod app;
pub mod args;
pub mod error;
pub mod recommend;
pub mod sweep;
pub mod theory;
pub mod trace;

use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use error::CliError;

/// Parses `argv` (program name first), runs it and returns the exit status.
///
/// Results go to `stdout` or the `--out` file; diagnostics go to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = stdout.write_all(rendered.as_bytes());
                return 0;
            }
            let _ = stderr.write_all(rendered.as_bytes());
            return 1;
        }
    };
    let result = app::execute(&cli.command).and_then(|rendered| {
        let out = app::output_args(&cli.command);
        app::write_output(out.out.as_deref(), &rendered.body, stdout)?;
        match rendered.failure {
            Some(reason) => Err(CliError::Validation(reason)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
