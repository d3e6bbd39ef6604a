mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neurowise_core::Condition;

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "neurowise", version, about = "Conversation-practice service and psychometric pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[command(flatten)]
        service: ServiceArgs,
        /// Overrides `server.port` from the config.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Reliability and validity of the stress estimator over an annotated corpus.
    Validate {
        #[arg(long)]
        annotations: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Between- and within-condition study analysis.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Feature ratings at or above this count as helpful.
        #[arg(long)]
        helpful_cutoff: Option<f64>,
    },
    /// Play the scripted conversations and write an annotation CSV.
    Corpus {
        #[command(flatten)]
        service: ServiceArgs,
        /// Directory of `*.toml` scripts; the bundled set when absent.
        #[arg(long)]
        scripts: Option<PathBuf>,
        /// Annotation CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write each session's JSONL export into this directory.
        #[arg(long)]
        exports: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Arm::Neurowise)]
        condition: Arm,
        /// Number of rater columns the script ratings are copied into.
        #[arg(long, default_value_t = 2)]
        raters: usize,
    },
    /// Join survey responses with session exports into a study-records CSV.
    Flatten {
        #[arg(long)]
        survey: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        exports: Vec<PathBuf>,
        /// Destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-feed exported transcripts and compare them turn by turn.
    Replay {
        #[command(flatten)]
        service: ServiceArgs,
        #[arg(long, num_args = 1.., required = true)]
        export: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ServiceArgs {
    /// Service config file; the bundled defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `assignment.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Arm {
    Neurowise,
    Baseline,
}

impl From<Arm> for Condition {
    fn from(a: Arm) -> Self {
        match a {
            Arm::Neurowise => Condition::NeuroWise,
            Arm::Baseline => Condition::Baseline,
        }
    }
}

/// Exit status for command-line misuse, kept apart from the pipeline codes.
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { service, port, host } => {
            commands::init_tracing();
            let config = commands::load_config(service.config.as_deref(), service.seed)?;
            commands::serve(config, &host, port)
        }
        Command::Validate {
            annotations,
            report,
            format,
            confidence,
        } => commands::validate(&annotations, report.as_deref(), format == Format::Json, confidence),
        Command::Analyze {
            records,
            report,
            format,
            helpful_cutoff,
        } => commands::analyze(&records, report.as_deref(), format == Format::Json, helpful_cutoff),
        Command::Corpus {
            service,
            scripts,
            out,
            exports,
            condition,
            raters,
        } => {
            let config = commands::load_config(service.config.as_deref(), service.seed)?;
            commands::corpus(
                config,
                scripts.as_deref(),
                out.as_deref(),
                exports.as_deref(),
                condition.into(),
                raters,
            )
        }
        Command::Flatten { survey, exports, out } => commands::flatten(&survey, &exports, out.as_deref()),
        Command::Replay { service, export } => {
            let config = commands::load_config(service.config.as_deref(), service.seed)?;
            commands::replay(config, &export)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_validate() {
        let c = Cli::try_parse_from(["neurowise", "validate", "--annotations", "a.csv", "--format", "json"]).unwrap();
        match c.command {
            Command::Validate { format, confidence, .. } => {
                assert_eq!(format, Format::Json);
                assert_eq!(confidence, 0.95);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flatten_requires_exports() {
        assert!(Cli::try_parse_from(["neurowise", "flatten", "--survey", "s.csv"]).is_err());
    }
}
