//! Write-ahead JSONL persistence, one file per session.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::AsyncWriteExt;

use super::session::{Lifecycle, Session, TriggerEvent, TurnRecord};
use crate::domain::{Message, StressState};

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal io at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} line {line}: {detail}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEvent {
    SessionCreated {
        session: Box<Session>,
    },
    Turn {
        record: Box<TurnRecord>,
        user_message: Message,
        partner_message: Message,
        stress: StressState,
        trigger: Option<TriggerEvent>,
        at: DateTime<Utc>,
    },
    Lifecycle {
        lifecycle: Lifecycle,
        at: DateTime<Utc>,
    },
}

impl JournalEvent {
    /// Builds the event that moves a session from its previous state to `after`
    /// by one turn.
    pub fn turn(after: &Session) -> Option<Self> {
        let record = after.turns.last()?.clone();
        let n = after.messages.len();
        if n < 2 {
            return None;
        }
        let trigger = after
            .trigger_events
            .last()
            .filter(|e| e.turn_index == record.turn_index)
            .cloned();
        Some(JournalEvent::Turn {
            record: Box::new(record),
            user_message: after.messages[n - 2].clone(),
            partner_message: after.messages[n - 1].clone(),
            stress: after.stress,
            trigger,
            at: after.last_activity,
        })
    }

    fn apply(self, session: &mut Option<Session>) -> Result<(), String> {
        match self {
            JournalEvent::SessionCreated { session: s } => {
                if session.is_some() {
                    return Err("duplicate session_created".into());
                }
                *session = Some(*s);
            }
            JournalEvent::Turn {
                record,
                user_message,
                partner_message,
                stress,
                trigger,
                at,
            } => {
                let s = session.as_mut().ok_or("turn before session_created")?;
                s.lifecycle = record.lifecycle;
                s.messages.push(user_message);
                s.messages.push(partner_message);
                s.stress = stress;
                s.trigger_events.extend(trigger);
                s.turns.push(*record);
                s.last_activity = at;
            }
            JournalEvent::Lifecycle { lifecycle, at } => {
                let s = session.as_mut().ok_or("lifecycle before session_created")?;
                s.lifecycle = lifecycle;
                s.last_activity = at;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Journal {
    dir: PathBuf,
}

impl Journal {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, JournalError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| JournalError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    /// Appends and flushes one event.
    pub async fn append(&self, session_id: &str, event: &JournalEvent) -> Result<(), JournalError> {
        let path = self.path_for(session_id);
        let io = |source| JournalError::Io {
            path: path.clone(),
            source,
        };
        let mut line = serde_json::to_string(event).expect("journal events serialize");
        line.push('\n');
        let mut file = tokio::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .await
            .map_err(io)?;
        file.write_all(line.as_bytes()).await.map_err(io)?;
        file.sync_data().await.map_err(io)?;
        Ok(())
    }

    /// Rebuilds every session found in the directory.
    pub fn recover(&self) -> Result<HashMap<String, Session>, JournalError> {
        let mut out = HashMap::new();
        let entries = std::fs::read_dir(&self.dir).map_err(|source| JournalError::Io {
            path: self.dir.clone(),
            source,
        })?;
        for entry in entries {
            let path = entry
                .map_err(|source| JournalError::Io {
                    path: self.dir.clone(),
                    source,
                })?
                .path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            if let Some(s) = Self::recover_file(&path)? {
                out.insert(s.id.clone(), s);
            }
        }
        Ok(out)
    }

    fn recover_file(path: &Path) -> Result<Option<Session>, JournalError> {
        let text = std::fs::read_to_string(path).map_err(|source| JournalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut session = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |detail: String| JournalError::Corrupt {
                path: path.to_path_buf(),
                line: i + 1,
                detail,
            };
            let event: JournalEvent = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            event.apply(&mut session).map_err(corrupt)?;
        }
        Ok(session)
    }
}
