//! `crossim` command line: corpus preparation, embedding, indexing, the
//! triplet benchmark, the three studies, regression tables, and a read-only
//! nearest-neighbour HTTP service.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod server;

use std::ffi::OsString;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};

use clap::Parser;
use serde::Serialize;

pub use commands::{Cli, Command};
pub use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Input,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Input => 2,
            ErrorKind::Internal => 3,
        }
    }
}

/// An error tagged with the exit code it should produce.
#[derive(Debug)]
pub struct Tagged {
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for Tagged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Tagged {}

pub fn usage_error(message: impl Into<String>) -> anyhow::Error {
    Tagged {
        kind: ErrorKind::Usage,
        message: message.into(),
    }
    .into()
}

pub fn input_error(message: impl Into<String>) -> anyhow::Error {
    Tagged {
        kind: ErrorKind::Input,
        message: message.into(),
    }
    .into()
}

/// Explicit tags win; otherwise bad or unreadable input data counts as an
/// input error and everything else is internal.
pub fn classify(err: &anyhow::Error) -> ErrorKind {
    use crossim_core::{corpus, embed, evalbench, index, stats, studies, synth};
    for cause in err.chain() {
        if let Some(t) = cause.downcast_ref::<Tagged>() {
            return t.kind;
        }
        if let Some(index::IndexError::ThreadPool(_)) = cause.downcast_ref() {
            return ErrorKind::Internal;
        }
    }
    let input = err.chain().any(|c| {
        c.is::<std::io::Error>()
            || c.is::<corpus::CorpusError>()
            || c.is::<embed::EmbedError>()
            || c.is::<index::IndexError>()
            || c.is::<evalbench::EvalError>()
            || c.is::<studies::StudyError>()
            || c.is::<stats::StatsError>()
            || c.is::<synth::SynthError>()
            || c.is::<csv::Error>()
            || c.is::<serde_json::Error>()
            || c.is::<toml::de::Error>()
    });
    if input {
        ErrorKind::Input
    } else {
        ErrorKind::Internal
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: ErrorKind,
    exit_code: i32,
    message: String,
    causes: Vec<String>,
    command: Option<&'a str>,
}

fn report_error(
    kind: ErrorKind,
    message: String,
    causes: Vec<String>,
    command: Option<&str>,
) -> i32 {
    let body = ErrorBody {
        kind,
        exit_code: kind.exit_code(),
        message,
        causes,
        command,
    };
    eprintln!("{}", serde_json::json!({ "error": body }));
    kind.exit_code()
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Errors go to stderr as one JSON line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    print!("{e}");
                    0
                }
                K::DisplayHelpOnMissingArgumentOrSubcommand => {
                    eprint!("{}", e.render());
                    ErrorKind::Usage.exit_code()
                }
                _ => report_error(
                    ErrorKind::Usage,
                    e.render().to_string().trim().to_string(),
                    Vec::new(),
                    None,
                ),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();

    let name = cli.command.name();
    let args: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match panic::catch_unwind(AssertUnwindSafe(|| commands::dispatch(&cli, &args))) {
        Ok(Ok(())) => 0,
        Ok(Err(err)) => {
            let kind = classify(&err);
            let causes = err.chain().skip(1).map(ToString::to_string).collect();
            report_error(kind, err.to_string(), causes, Some(name))
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            report_error(ErrorKind::Internal, message, Vec::new(), Some(name))
        }
    }
}
