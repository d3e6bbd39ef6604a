use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use neurowise_core::config::{ConfigError, ServiceConfig};
use neurowise_core::corpus::{bundled_scripts, load_scripts, run_corpus, CorpusError};
use neurowise_core::orchestrator::{http, parse_export, replay_transcript, Orchestrator, ReplayError, ServiceError};
use neurowise_core::psychometrics::{
    flatten_exports, parse_annotations, parse_study_records, run_analysis, run_validation, write_study_csv,
    AnalysisOptions, PipelineError,
};
use neurowise_core::Condition;
use serde::Serialize;
use thiserror::Error;
use tracing::info;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Replay {
        path: String,
        #[source]
        source: ReplayError,
    },
    #[error("{0} transcript(s) diverged on replay")]
    Diverged(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CliError {
    /// 2 for malformed input files, 3 for inputs the statistics cannot be
    /// computed on, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(PipelineError::Schema(_)) => 2,
            CliError::Pipeline(PipelineError::Stats(_)) => 3,
            CliError::Replay {
                source: ReplayError::Parse { .. },
                ..
            } => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|source| {
        CliError::Pipeline(PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

fn write_out(path: Option<&Path>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, body).map_err(io_err(p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(io_err(Path::new("<runtime>")))
}

pub fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).try_init();
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ServiceConfig, CliError> {
    let mut config = match path {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::bundled(),
    };
    if seed.is_some() {
        config.assignment.seed = seed;
    }
    Ok(config)
}

pub fn serve(config: ServiceConfig, host: &str, port: Option<u16>) -> Result<(), CliError> {
    let port = port.unwrap_or(config.server.port);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Argument(format!("address {host}:{port}: {e}")))?;
    let sweep = (config.idle_timeout() / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let orchestrator = Arc::new(Orchestrator::from_config(config)?);
    info!(provider = orchestrator.provider().name(), "starting");
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err(Path::new("<runtime>")))?;
    rt.block_on(http::serve(orchestrator, addr, sweep))
        .map_err(|source| CliError::Io {
            path: addr.to_string(),
            source,
        })
}

pub fn validate(annotations: &Path, report: Option<&Path>, as_json: bool, confidence: f64) -> Result<(), CliError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CliError::Argument(format!("confidence {confidence} outside (0, 1)")));
    }
    let turns = parse_annotations(open(annotations)?)?;
    let result = run_validation(&turns, confidence).map_err(PipelineError::from)?;
    let doc = json(&result);
    if let Some(p) = report {
        fs::write(p, &doc).map_err(io_err(p))?;
    }
    write_out(None, &if as_json { doc } else { result.to_table() })
}

pub fn analyze(
    records: &Path,
    report: Option<&Path>,
    as_json: bool,
    helpful_cutoff: Option<f64>,
) -> Result<(), CliError> {
    if let Some(c) = helpful_cutoff {
        if !(1.0..=7.0).contains(&c) {
            return Err(CliError::Argument(format!("helpful cutoff {c} outside [1, 7]")));
        }
    }
    let rows = parse_study_records(open(records)?)?;
    let result = run_analysis(&rows, &AnalysisOptions { helpful_cutoff }).map_err(PipelineError::from)?;
    let doc = json(&result);
    if let Some(p) = report {
        fs::write(p, &doc).map_err(io_err(p))?;
    }
    write_out(None, &if as_json { doc } else { result.to_table() })
}

pub fn corpus(
    config: ServiceConfig,
    scripts_dir: Option<&Path>,
    out: Option<&Path>,
    exports: Option<&Path>,
    condition: Condition,
    raters: usize,
) -> Result<(), CliError> {
    if raters < 1 {
        return Err(CliError::Argument("at least one rater column is required".into()));
    }
    let scripts = match scripts_dir {
        Some(d) => load_scripts(d)?,
        None => bundled_scripts(),
    };
    let orchestrator = Orchestrator::from_config(config)?;
    let run = runtime()?.block_on(run_corpus(&orchestrator, &scripts, condition, raters))?;
    if let Some(dir) = exports {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for r in &run.runs {
            let p: PathBuf = dir.join(format!("{}.jsonl", r.script_id));
            fs::write(&p, &r.export).map_err(io_err(&p))?;
        }
    }
    write_out(out, &run.annotations_csv())
}

pub fn flatten(survey: &Path, exports: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    let mut turns = Vec::new();
    for p in exports {
        let text = fs::read_to_string(p).map_err(io_err(p))?;
        turns.extend(parse_export(&text).map_err(|source| CliError::Replay {
            path: p.display().to_string(),
            source,
        })?);
    }
    let records = flatten_exports(open(survey)?, &turns)?;
    let mut buf = Vec::new();
    write_study_csv(&records, &mut buf).map_err(|e| CliError::Io {
        path: "<csv>".into(),
        source: e.into(),
    })?;
    write_out(out, &String::from_utf8(buf).expect("csv is utf-8"))
}

pub fn replay(config: ServiceConfig, exports: &[PathBuf]) -> Result<(), CliError> {
    let orchestrator = Orchestrator::from_config(config)?;
    let rt = runtime()?;
    let mut diverged = 0;
    let mut out = String::new();
    for p in exports {
        let ctx = |source| CliError::Replay {
            path: p.display().to_string(),
            source,
        };
        let text = fs::read_to_string(p).map_err(io_err(p))?;
        let records = parse_export(&text).map_err(ctx)?;
        let report = rt.block_on(replay_transcript(&orchestrator, &records)).map_err(ctx)?;
        if report.is_identical() {
            out.push_str(&format!("{}: identical ({} turns)\n", p.display(), report.turns_compared));
        } else {
            diverged += 1;
            out.push_str(&format!(
                "{}: DIVERGED ({} mismatched, {} unplayed of {} turns)\n",
                p.display(),
                report.mismatches.len(),
                report.unplayed_turns,
                records.len()
            ));
            for m in &report.mismatches {
                out.push_str(&format!("  turn {}\n    expected {}\n    actual   {}\n", m.turn_index, m.expected, m.actual));
            }
        }
    }
    write_out(None, &out)?;
    if diverged > 0 {
        return Err(CliError::Diverged(diverged));
    }
    Ok(())
}
