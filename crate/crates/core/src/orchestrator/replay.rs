//! Re-feeds an exported transcript through a fresh session and compares every
//! turn against the recording.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::session::TurnRecord;
use super::{Orchestrator, ServiceError};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("export line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("transcript is empty")]
    Empty,
    #[error("transcript mixes sessions or scenarios at turn {0}")]
    Inconsistent(u32),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

/// Parses a JSONL export into turn records, skipping blank lines.
pub fn parse_export(text: &str) -> Result<Vec<TurnRecord>, ReplayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReplayError::Parse {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayMismatch {
    pub turn_index: u32,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub session_id: String,
    pub turns_compared: usize,
    pub mismatches: Vec<ReplayMismatch>,
    /// Turns in the recording that could not be fed because the replayed
    /// session had already ended.
    pub unplayed_turns: usize,
}

impl ReplayReport {
    pub fn is_identical(&self) -> bool {
        self.mismatches.is_empty() && self.unplayed_turns == 0
    }
}

/// Canonical form of a record for comparison: everything except the
/// session id and wall-clock timestamp.
fn canonical(r: &TurnRecord) -> String {
    let mut r = r.clone();
    r.session_id.clear();
    r.ts = chrono::DateTime::UNIX_EPOCH;
    serde_json::to_string(&r).expect("turn record serializes")
}

/// Replays `records` (one session's export) in a new session of the same
/// condition and scenario on `orchestrator`.
pub async fn replay_transcript(orchestrator: &Orchestrator, records: &[TurnRecord]) -> Result<ReplayReport, ReplayError> {
    let first = records.first().ok_or(ReplayError::Empty)?;
    if let Some(bad) = records
        .iter()
        .find(|r| r.session_id != first.session_id || r.scenario_id != first.scenario_id || r.condition != first.condition)
    {
        return Err(ReplayError::Inconsistent(bad.turn_index));
    }
    let session = orchestrator
        .create_session_with_condition(first.condition, &first.scenario_id)
        .await?;
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (i, rec) in records.iter().enumerate() {
        match orchestrator.process_turn(&session.id, &rec.user_text).await {
            Ok(_) => {}
            Err(ServiceError::NotActive { .. }) => {
                return Ok(ReplayReport {
                    session_id: session.id,
                    turns_compared: compared,
                    mismatches,
                    unplayed_turns: records.len() - i,
                });
            }
            Err(e) => return Err(e.into()),
        }
        let snap = orchestrator.session_snapshot(&session.id).await?;
        let actual = snap.turns.last().expect("turn just recorded");
        let (e, a) = (canonical(rec), canonical(actual));
        if e != a {
            mismatches.push(ReplayMismatch {
                turn_index: rec.turn_index,
                expected: e,
                actual: a,
            });
        }
        compared += 1;
    }
    Ok(ReplayReport {
        session_id: session.id,
        turns_compared: compared,
        mismatches,
        unplayed_turns: 0,
    })
}
