//! Scripted conversations with per-turn stress ratings, run through the
//! orchestrator to produce an annotated validation corpus.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::DEFAULT_SCENARIO_ID;
use crate::domain::Condition;
use crate::orchestrator::{Orchestrator, ServiceError};
use crate::psychometrics::{AnnotatedTurn, CorpusLabel};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("script {id}: {detail}")]
    Invalid { id: String, detail: String },
    #[error("script {id} ended ({lifecycle}) after turn {turn} of {total}")]
    EndedEarly {
        id: String,
        lifecycle: String,
        turn: usize,
        total: usize,
    },
    #[error(transparent)]
    Service(#[from] ServiceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTurn {
    pub text: String,
    /// Rated partner stress after this message, 0-100.
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub id: String,
    pub label: CorpusLabel,
    #[serde(default = "default_scenario")]
    pub scenario_id: String,
    pub turns: Vec<ScriptTurn>,
}

fn default_scenario() -> String {
    DEFAULT_SCENARIO_ID.to_string()
}

impl Script {
    pub fn parse(source: &str, origin: &str) -> Result<Self, CorpusError> {
        let s: Script = toml::from_str(source).map_err(|e| CorpusError::Invalid {
            id: origin.to_string(),
            detail: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |detail: String| CorpusError::Invalid {
            id: self.id.clone(),
            detail,
        };
        if self.turns.is_empty() {
            return Err(bad("no turns".into()));
        }
        for (i, t) in self.turns.iter().enumerate() {
            if t.text.trim().is_empty() {
                return Err(bad(format!("turn {} is empty", i + 1)));
            }
            if !(0.0..=100.0).contains(&t.rating) {
                return Err(bad(format!("turn {} rating {} outside [0, 100]", i + 1, t.rating)));
            }
        }
        Ok(())
    }
}

const BUNDLED: [(&str, &str); 15] = [
    ("low-01", include_str!("../assets/scripts/low-01.toml")),
    ("low-02", include_str!("../assets/scripts/low-02.toml")),
    ("low-03", include_str!("../assets/scripts/low-03.toml")),
    ("low-04", include_str!("../assets/scripts/low-04.toml")),
    ("low-05", include_str!("../assets/scripts/low-05.toml")),
    ("low-06", include_str!("../assets/scripts/low-06.toml")),
    ("low-07", include_str!("../assets/scripts/low-07.toml")),
    ("low-08", include_str!("../assets/scripts/low-08.toml")),
    ("high-01", include_str!("../assets/scripts/high-01.toml")),
    ("high-02", include_str!("../assets/scripts/high-02.toml")),
    ("high-03", include_str!("../assets/scripts/high-03.toml")),
    ("high-04", include_str!("../assets/scripts/high-04.toml")),
    ("high-05", include_str!("../assets/scripts/high-05.toml")),
    ("high-06", include_str!("../assets/scripts/high-06.toml")),
    ("high-07", include_str!("../assets/scripts/high-07.toml")),
];

/// The fifteen bundled scripts (eight low-stress, seven high-stress).
pub fn bundled_scripts() -> Vec<Script> {
    BUNDLED
        .iter()
        .map(|(name, src)| Script::parse(src, name).expect("bundled scripts are valid"))
        .collect()
}

/// Loads every `*.toml` script in `dir`, sorted by file name.
pub fn load_scripts(dir: &Path) -> Result<Vec<Script>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("toml"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let src = std::fs::read_to_string(p).map_err(|source| CorpusError::Io {
                path: p.display().to_string(),
                source,
            })?;
            Script::parse(&src, &p.display().to_string())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRun {
    pub script_id: String,
    pub session_id: String,
    /// The session's JSONL export.
    pub export: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRun {
    pub annotations: Vec<AnnotatedTurn>,
    pub runs: Vec<ScriptRun>,
}

impl CorpusRun {
    /// Annotation CSV in the layout read by the validation pipeline.
    pub fn annotations_csv(&self) -> String {
        let raters = self.annotations.first().map(|a| a.rater_scores.len()).unwrap_or(2);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(AnnotatedTurn::csv_header(raters)).expect("in-memory write");
        for a in &self.annotations {
            w.write_record(a.csv_row()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Plays each script in a fresh session and pairs every turn's algorithm
/// stress with the script's rating, copied to `raters` rater columns.
pub async fn run_corpus(
    orchestrator: &Orchestrator,
    scripts: &[Script],
    condition: Condition,
    raters: usize,
) -> Result<CorpusRun, CorpusError> {
    let mut annotations = Vec::new();
    let mut runs = Vec::new();
    for script in scripts {
        let session = orchestrator
            .create_session_with_condition(condition, &script.scenario_id)
            .await?;
        for (i, turn) in script.turns.iter().enumerate() {
            let result = orchestrator.process_turn(&session.id, &turn.text).await?;
            let snap = orchestrator.session_snapshot(&session.id).await?;
            let record = snap.turns.last().expect("turn recorded");
            annotations.push(AnnotatedTurn {
                conversation_id: script.id.clone(),
                turn_index: record.turn_index,
                rater_scores: vec![turn.rating; raters],
                algorithm_score: f64::from(record.stress_after),
                corpus_label: script.label,
            });
            if !result.session_lifecycle.is_active() && i + 1 < script.turns.len() {
                return Err(CorpusError::EndedEarly {
                    id: script.id.clone(),
                    lifecycle: format!("{:?}", result.session_lifecycle),
                    turn: i + 1,
                    total: script.turns.len(),
                });
            }
        }
        runs.push(ScriptRun {
            script_id: script.id.clone(),
            session_id: session.id.clone(),
            export: orchestrator.export_session(&session.id).await?,
        });
    }
    Ok(CorpusRun { annotations, runs })
}
