use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::assignment::StratumKey;
use crate::domain::{
    CommunicationCategory, Condition, Message, ScenarioConfig, StressState, Suggestion, SupportPayload,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifecycle {
    Active,
    ResolvedEnd,
    TurnCapEnd,
    Abandoned,
}

impl Lifecycle {
    pub fn is_active(self) -> bool {
        self == Lifecycle::Active
    }

    /// Only Active may move, and only to a terminal state.
    pub fn can_transition_to(self, next: Lifecycle) -> bool {
        self == Lifecycle::Active && next != Lifecycle::Active
    }
}

/// Support issued on one user turn (1-based `turn_index`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub turn_index: u32,
    pub payload: SupportPayload,
}

/// One exported transcript line: the full internal view of one user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub session_id: String,
    pub condition: Condition,
    pub scenario_id: String,
    pub turn_index: u32,
    pub user_text: String,
    pub categories: Vec<CommunicationCategory>,
    pub stress_before: u8,
    pub stress_after: u8,
    pub applied_delta: i32,
    pub triggered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestions: Option<Vec<Suggestion>>,
    pub partner_text: String,
    pub lifecycle: Lifecycle,
    pub ts: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub condition: Condition,
    pub stratum: Option<StratumKey>,
    pub scenario: ScenarioConfig,
    pub messages: Vec<Message>,
    pub stress: StressState,
    pub trigger_events: Vec<TriggerEvent>,
    pub turns: Vec<TurnRecord>,
    pub lifecycle: Lifecycle,
    pub created_at: DateTime<Utc>,
    pub last_activity: DateTime<Utc>,
}

impl Session {
    pub fn turn_count(&self) -> u32 {
        u32::try_from(self.turns.len()).unwrap_or(u32::MAX)
    }

    pub fn is_idle(&self, now: DateTime<Utc>, timeout: std::time::Duration) -> bool {
        let timeout = Duration::from_std(timeout).unwrap_or(Duration::MAX);
        now.signed_duration_since(self.last_activity) > timeout
    }

    pub fn latest_support(&self) -> Option<&SupportPayload> {
        self.trigger_events.last().map(|e| &e.payload)
    }

    /// The client-facing view: stress and support only for NeuroWise.
    pub fn view(&self) -> SessionView {
        let shows = self.condition.shows_support();
        SessionView {
            id: self.id.clone(),
            condition: self.condition,
            scenario_id: self.scenario.id.clone(),
            messages: self.messages.clone(),
            stress: shows.then_some(self.stress),
            support: if shows { self.latest_support().cloned() } else { None },
            lifecycle: self.lifecycle,
            turn_count: self.turn_count(),
        }
    }

    /// JSONL export, one line per turn, including internal stress for both arms.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.turns {
            out.push_str(&serde_json::to_string(t).expect("turn record serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub condition: Condition,
    pub scenario_id: String,
    pub messages: Vec<Message>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stress: Option<StressState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportPayload>,
    pub lifecycle: Lifecycle,
    pub turn_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnResult {
    pub partner_message: Message,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stress_view: Option<StressState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportPayload>,
    pub session_lifecycle: Lifecycle,
}

impl TurnResult {
    /// Gates internal turn output by condition.
    pub fn gated(
        condition: Condition,
        partner_message: Message,
        stress: StressState,
        support: Option<SupportPayload>,
        lifecycle: Lifecycle,
    ) -> Self {
        let shows = condition.shows_support();
        Self {
            partner_message,
            stress_view: shows.then_some(stress),
            support: if shows { support } else { None },
            session_lifecycle: lifecycle,
        }
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn advance(&self, by: std::time::Duration) {
        let mut t = self.0.lock().expect("clock lock");
        *t += Duration::from_std(by).expect("duration in range");
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}
