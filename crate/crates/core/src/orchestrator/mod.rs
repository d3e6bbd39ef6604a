//! Session lifecycle: condition assignment, the per-turn pipeline, gating,
//! persistence and export.

mod assignment;
pub mod http;
mod journal;
mod replay;
mod session;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use thiserror::Error;
use tokio::sync::Mutex;
use tracing::{info, warn};

use crate::agents::{
    generate_coaching, generate_interpretation, generate_partner_reply, AgentError, AgentSuite,
    ChatProvider, ConversationContext,
};
use crate::config::{ConfigError, ServiceConfig};
use crate::domain::{Condition, ContractViolation, Message, Role, StressState, SupportPayload};
use crate::stress::{classify_message, should_trigger_support, update_stress, StressError};

pub use assignment::{ArmCounts, BlockRandomizer, ContactFrequency, Gender, StratumKey};
pub use journal::{Journal, JournalError, JournalEvent};
pub use replay::{replay_transcript, parse_export, ReplayError, ReplayMismatch, ReplayReport};
pub use session::{
    Clock, Lifecycle, ManualClock, Session, SessionView, SystemClock, TriggerEvent, TurnRecord, TurnResult,
};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("session '{0}' not found")]
    NotFound(String),
    #[error("scenario '{0}' not found")]
    UnknownScenario(String),
    #[error("session '{id}' is {lifecycle:?}, not active")]
    NotActive { id: String, lifecycle: Lifecycle },
    #[error("session '{0}' already has a turn in flight")]
    TurnInFlight(String),
    #[error(transparent)]
    Contract(#[from] ContractViolation),
    #[error(transparent)]
    Classification(#[from] StressError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Persistence(#[from] JournalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl ServiceError {
    /// Conflict errors leave the session untouched and may be retried later.
    pub fn is_conflict(&self) -> bool {
        matches!(self, ServiceError::NotActive { .. } | ServiceError::TurnInFlight(_))
    }
}

type SessionHandle = Arc<Mutex<Session>>;

pub struct Orchestrator {
    config: ServiceConfig,
    suite: AgentSuite,
    provider: Arc<dyn ChatProvider>,
    clock: Arc<dyn Clock>,
    journal: Option<Journal>,
    randomizer: std::sync::Mutex<BlockRandomizer>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl Orchestrator {
    pub fn new(config: ServiceConfig, suite: AgentSuite, provider: Arc<dyn ChatProvider>) -> Self {
        let randomizer = BlockRandomizer::new(config.assignment.seed);
        Self {
            config,
            suite,
            provider,
            clock: Arc::new(SystemClock),
            journal: None,
            randomizer: std::sync::Mutex::new(randomizer),
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Builds provider, agents and (when `server.data_dir` is set) the journal,
    /// recovering any sessions already on disk.
    pub fn from_config(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let provider = config.provider.build()?;
        let suite = config.agents.build()?;
        let data_dir = config.server.data_dir.clone();
        let mut orch = Self::new(config, suite, provider);
        if let Some(dir) = data_dir {
            orch = orch.with_journal(Journal::open(dir)?)?;
        }
        Ok(orch)
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Attaches a journal and loads the sessions it holds.
    pub fn with_journal(mut self, journal: Journal) -> Result<Self, ServiceError> {
        let recovered = journal.recover()?;
        if !recovered.is_empty() {
            info!(count = recovered.len(), dir = %journal.dir().display(), "recovered sessions");
        }
        {
            let mut map = self.sessions.write().expect("session map lock");
            for (id, s) in recovered {
                map.insert(id, Arc::new(Mutex::new(s)));
            }
        }
        self.journal = Some(journal);
        Ok(self)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn provider(&self) -> &Arc<dyn ChatProvider> {
        &self.provider
    }

    fn handle(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.sessions.read().expect("session map lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Creates a session with a condition from blocked randomization within `stratum`.
    pub async fn create_session(&self, stratum: StratumKey, scenario_id: &str) -> Result<Session, ServiceError> {
        if self.config.scenario(scenario_id).is_none() {
            return Err(ServiceError::UnknownScenario(scenario_id.to_string()));
        }
        let (condition, id) = {
            let mut r = self.randomizer.lock().expect("randomizer lock");
            (r.assign(stratum), r.session_id())
        };
        self.insert_new(id, condition, Some(stratum), scenario_id).await
    }

    /// Creates a session in a fixed condition, bypassing randomization.
    pub async fn create_session_with_condition(
        &self,
        condition: Condition,
        scenario_id: &str,
    ) -> Result<Session, ServiceError> {
        if self.config.scenario(scenario_id).is_none() {
            return Err(ServiceError::UnknownScenario(scenario_id.to_string()));
        }
        let id = self.randomizer.lock().expect("randomizer lock").session_id();
        self.insert_new(id, condition, None, scenario_id).await
    }

    async fn insert_new(
        &self,
        id: String,
        condition: Condition,
        stratum: Option<StratumKey>,
        scenario_id: &str,
    ) -> Result<Session, ServiceError> {
        let scenario = self
            .config
            .scenario(scenario_id)
            .ok_or_else(|| ServiceError::UnknownScenario(scenario_id.to_string()))?
            .clone();
        let now = self.clock.now();
        let opener = Message::new(Role::Partner, scenario.opener_text.clone(), 0, now)?;
        let stress = StressState::initial(scenario.initial_stress, &self.config.bands)?;
        let session = Session {
            id: id.clone(),
            condition,
            stratum,
            scenario,
            messages: vec![opener],
            stress,
            trigger_events: Vec::new(),
            turns: Vec::new(),
            lifecycle: Lifecycle::Active,
            created_at: now,
            last_activity: now,
        };
        if let Some(j) = &self.journal {
            j.append(
                &id,
                &JournalEvent::SessionCreated {
                    session: Box::new(session.clone()),
                },
            )
            .await?;
        }
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    /// Runs one user turn. On any error the session is left exactly as it was.
    pub async fn process_turn(&self, session_id: &str, user_text: &str) -> Result<TurnResult, ServiceError> {
        let handle = self.handle(session_id)?;
        let mut guard = handle
            .try_lock()
            .map_err(|_| ServiceError::TurnInFlight(session_id.to_string()))?;
        let now = self.clock.now();
        if guard.lifecycle.is_active() && guard.is_idle(now, self.config.idle_timeout()) {
            self.transition(&mut guard, Lifecycle::Abandoned).await?;
        }
        if !guard.lifecycle.is_active() {
            return Err(ServiceError::NotActive {
                id: session_id.to_string(),
                lifecycle: guard.lifecycle,
            });
        }
        if user_text.trim().is_empty() {
            return Err(ContractViolation::new("user message must be nonempty").into());
        }

        let mut next = guard.clone();
        let result = self.run_pipeline(&mut next, user_text).await?;
        if let Some(j) = &self.journal {
            let event = JournalEvent::turn(&next).expect("a turn was just appended");
            j.append(session_id, &event).await?;
        }
        *guard = next;
        Ok(result)
    }

    async fn run_pipeline(
        &self,
        s: &mut Session,
        user_text: &str,
    ) -> Result<TurnResult, ServiceError> {
        let now = self.clock.now();
        let provider = self.provider.as_ref();
        let last_index = s.messages.last().map(|m| m.turn_index).unwrap_or(0);
        let user_msg = Message::new(Role::User, user_text, last_index + 1, now)?;

        let classification = classify_message(user_text, &s.messages, &s.scenario, &self.suite, provider).await?;
        let categories = classification.category_list();
        let before = s.stress;
        let (after, applied) = update_stress(&before, &classification, &self.config.delta_table, &self.config.bands);
        let triggered = should_trigger_support(applied, &self.config.trigger_policy);

        s.messages.push(user_msg);
        let turn_number = s.turn_count() + 1;

        let support = if triggered && s.condition.shows_support() {
            let ctx = ConversationContext::new(&s.scenario, &s.messages);
            let policy = &self.config.trigger_policy;
            let (interpretation, suggestions) = tokio::join!(
                generate_interpretation(&self.suite, &ctx, &after, applied, &categories, policy, provider),
                generate_coaching(&self.suite, &ctx, &after, applied, &categories, policy, provider),
            );
            Some(SupportPayload::new(interpretation?, suggestions?, applied)?)
        } else {
            None
        };

        let partner = {
            let ctx = ConversationContext::new(&s.scenario, &s.messages);
            generate_partner_reply(&self.suite, &ctx, &after, &categories, provider, now).await?
        };

        let lifecycle = if after.level <= s.scenario.resolution_stress_max {
            Lifecycle::ResolvedEnd
        } else if turn_number >= s.scenario.turn_cap {
            Lifecycle::TurnCapEnd
        } else {
            Lifecycle::Active
        };

        s.turns.push(TurnRecord {
            session_id: s.id.clone(),
            condition: s.condition,
            scenario_id: s.scenario.id.clone(),
            turn_index: turn_number,
            user_text: user_text.to_string(),
            categories,
            stress_before: before.level,
            stress_after: after.level,
            applied_delta: applied,
            triggered,
            interpretation: support.as_ref().map(|p| p.interpretation.clone()),
            suggestions: support.as_ref().map(|p| p.suggestions.clone()),
            partner_text: partner.text.clone(),
            lifecycle,
            ts: now,
        });
        if let Some(p) = &support {
            s.trigger_events.push(TriggerEvent {
                turn_index: turn_number,
                payload: p.clone(),
            });
        }
        s.messages.push(partner.clone());
        s.stress = after;
        s.lifecycle = lifecycle;
        s.last_activity = now;

        Ok(TurnResult::gated(s.condition, partner, after, support, lifecycle))
    }

    async fn transition(&self, s: &mut Session, to: Lifecycle) -> Result<(), ServiceError> {
        if !s.lifecycle.can_transition_to(to) {
            return Err(ServiceError::NotActive {
                id: s.id.clone(),
                lifecycle: s.lifecycle,
            });
        }
        let at = self.clock.now();
        if let Some(j) = &self.journal {
            j.append(&s.id, &JournalEvent::Lifecycle { lifecycle: to, at }).await?;
        }
        s.lifecycle = to;
        s.last_activity = at;
        Ok(())
    }

    /// Client-facing view, gated by condition.
    pub async fn session_view(&self, session_id: &str) -> Result<SessionView, ServiceError> {
        let handle = self.handle(session_id)?;
        let s = handle.lock().await;
        Ok(s.view())
    }

    /// Full internal snapshot, for analysis and tests.
    pub async fn session_snapshot(&self, session_id: &str) -> Result<Session, ServiceError> {
        let handle = self.handle(session_id)?;
        let s = handle.lock().await;
        Ok(s.clone())
    }

    /// JSONL with one line per turn, including Baseline stress.
    pub async fn export_session(&self, session_id: &str) -> Result<String, ServiceError> {
        let handle = self.handle(session_id)?;
        let s = handle.lock().await;
        Ok(s.export_jsonl())
    }

    /// Ends an Active session at the user's request: resolved if stress is
    /// already at or below the scenario's resolution threshold, abandoned otherwise.
    pub async fn end_session(&self, session_id: &str) -> Result<SessionView, ServiceError> {
        let handle = self.handle(session_id)?;
        let mut s = handle
            .try_lock()
            .map_err(|_| ServiceError::TurnInFlight(session_id.to_string()))?;
        let to = if s.stress.level <= s.scenario.resolution_stress_max {
            Lifecycle::ResolvedEnd
        } else {
            Lifecycle::Abandoned
        };
        self.transition(&mut s, to).await?;
        Ok(s.view())
    }

    /// Marks idle Active sessions as Abandoned; returns their ids.
    /// Sessions with a turn in flight are skipped.
    pub async fn expire_idle(&self) -> Vec<String> {
        let now = self.clock.now();
        let timeout: Duration = self.config.idle_timeout();
        let handles: Vec<(String, SessionHandle)> = self
            .sessions
            .read()
            .expect("session map lock")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut expired = Vec::new();
        for (id, h) in handles {
            let Ok(mut s) = h.try_lock() else { continue };
            if s.lifecycle.is_active() && s.is_idle(now, timeout) {
                match self.transition(&mut s, Lifecycle::Abandoned).await {
                    Ok(()) => expired.push(id),
                    Err(e) => warn!(session = %id, error = %e, "could not abandon idle session"),
                }
            }
        }
        expired.sort();
        expired
    }

    pub fn assignment_counts(&self) -> BTreeMap<StratumKey, ArmCounts> {
        self.randomizer.lock().expect("randomizer lock").counts()
    }
}
