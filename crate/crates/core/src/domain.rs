//! Shared vocabulary types for sessions, stress and support payloads.
//!
//! Every type here is an immutable value object with snake_case JSON field
//! names; the same names are used on the wire API and in JSONL transcripts.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A caller broke a documented precondition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("contract violation: {0}")]
pub struct ContractViolation(pub String);

impl ContractViolation {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Study arm a session belongs to. Fixed at session creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    #[serde(rename = "neurowise")]
    NeuroWise,
}

impl Condition {
    pub fn other(self) -> Self {
        match self {
            Condition::Baseline => Condition::NeuroWise,
            Condition::NeuroWise => Condition::Baseline,
        }
    }

    /// Whether the stress bar, interpreter and coach are shown.
    pub fn shows_support(self) -> bool {
        matches!(self, Condition::NeuroWise)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::NeuroWise => "neurowise",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = ContractViolation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(Condition::Baseline),
            "neurowise" => Ok(Condition::NeuroWise),
            other => Err(ContractViolation::new(format!("unknown condition '{other}'"))),
        }
    }
}

/// Communication pattern detected in a user message.
///
/// `Neutral` covers small talk and is never combined with another category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommunicationCategory {
    Validation,
    Invalidation,
    Pressure,
    OptionsGiving,
    SensoryAccommodation,
    Neutral,
}

impl CommunicationCategory {
    pub const ALL: [CommunicationCategory; 6] = [
        CommunicationCategory::Validation,
        CommunicationCategory::Invalidation,
        CommunicationCategory::Pressure,
        CommunicationCategory::OptionsGiving,
        CommunicationCategory::SensoryAccommodation,
        CommunicationCategory::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommunicationCategory::Validation => "validation",
            CommunicationCategory::Invalidation => "invalidation",
            CommunicationCategory::Pressure => "pressure",
            CommunicationCategory::OptionsGiving => "options_giving",
            CommunicationCategory::SensoryAccommodation => "sensory_accommodation",
            CommunicationCategory::Neutral => "neutral",
        }
    }
}

impl fmt::Display for CommunicationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CommunicationCategory {
    type Err = ContractViolation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        CommunicationCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| ContractViolation::new(format!("unknown category '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Partner,
}

/// One chat message. `turn_index` is the message's position in the session
/// (the partner's opener is 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    pub turn_index: u32,
    pub timestamp: DateTime<Utc>,
}

impl Message {
    pub fn new(
        role: Role,
        text: impl Into<String>,
        turn_index: u32,
        timestamp: DateTime<Utc>,
    ) -> Result<Self, ContractViolation> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ContractViolation::new("message text must be nonempty"));
        }
        Ok(Self {
            role,
            text,
            turn_index,
            timestamp,
        })
    }
}

/// Checks role alternation (partner first) and strictly increasing indices.
pub fn validate_history(messages: &[Message]) -> Result<(), ContractViolation> {
    for (i, m) in messages.iter().enumerate() {
        let expected = if i % 2 == 0 { Role::Partner } else { Role::User };
        if m.role != expected {
            return Err(ContractViolation::new(format!(
                "message {i} has role {:?}, expected {expected:?}",
                m.role
            )));
        }
        if i > 0 && m.turn_index <= messages[i - 1].turn_index {
            return Err(ContractViolation::new(format!(
                "turn_index not strictly increasing at message {i}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressBand {
    Calm,
    Elevated,
    High,
}

impl StressBand {
    pub fn as_str(self) -> &'static str {
        match self {
            StressBand::Calm => "calm",
            StressBand::Elevated => "elevated",
            StressBand::High => "high",
        }
    }
}

impl fmt::Display for StressBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lower bounds of the Elevated and High bands. Calm is `[0, elevated_from)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandThresholds {
    pub elevated_from: u8,
    pub high_from: u8,
}

impl Default for BandThresholds {
    fn default() -> Self {
        Self {
            elevated_from: 30,
            high_from: 70,
        }
    }
}

impl BandThresholds {
    pub fn validate(&self) -> Result<(), ContractViolation> {
        if self.elevated_from == 0 || self.elevated_from >= self.high_from || self.high_from > 100 {
            return Err(ContractViolation::new(format!(
                "band thresholds must satisfy 0 < elevated_from < high_from <= 100, got {} / {}",
                self.elevated_from, self.high_from
            )));
        }
        Ok(())
    }

    pub fn band_of(&self, level: i64) -> Result<StressBand, ContractViolation> {
        if !(0..=100).contains(&level) {
            return Err(ContractViolation::new(format!(
                "stress level {level} outside [0, 100]"
            )));
        }
        Ok(if level < i64::from(self.elevated_from) {
            StressBand::Calm
        } else if level < i64::from(self.high_from) {
            StressBand::Elevated
        } else {
            StressBand::High
        })
    }
}

/// Band for `level` under the default 30/70 thresholds.
pub fn band_of(level: i64) -> Result<StressBand, ContractViolation> {
    BandThresholds::default().band_of(level)
}

/// Partner stress as shown on the stress bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressState {
    pub level: u8,
    pub band: StressBand,
    pub last_delta: i32,
}

impl StressState {
    pub fn new(level: u8, last_delta: i32, bands: &BandThresholds) -> Result<Self, ContractViolation> {
        let band = bands.band_of(i64::from(level))?;
        Ok(Self {
            level,
            band,
            last_delta,
        })
    }

    pub fn initial(level: u8, bands: &BandThresholds) -> Result<Self, ContractViolation> {
        Self::new(level, 0, bands)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub persona_brief: String,
    pub opener_text: String,
    pub initial_stress: u8,
    pub sensory_triggers: Vec<String>,
    pub turn_cap: u32,
    pub resolution_stress_max: u8,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ContractViolation> {
        if self.id.trim().is_empty() {
            return Err(ContractViolation::new("scenario id must be nonempty"));
        }
        if self.opener_text.trim().is_empty() {
            return Err(ContractViolation::new(format!(
                "scenario '{}' has an empty opener",
                self.id
            )));
        }
        if self.initial_stress > 100 || self.resolution_stress_max > 100 {
            return Err(ContractViolation::new(format!(
                "scenario '{}' stress values must be within [0, 100]",
                self.id
            )));
        }
        if self.resolution_stress_max >= self.initial_stress {
            return Err(ContractViolation::new(format!(
                "scenario '{}': resolution_stress_max ({}) must be below initial_stress ({})",
                self.id, self.resolution_stress_max, self.initial_stress
            )));
        }
        if self.turn_cap == 0 {
            return Err(ContractViolation::new(format!(
                "scenario '{}': turn_cap must be at least 1",
                self.id
            )));
        }
        Ok(())
    }
}

/// Coaching strategy a suggestion is tagged with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Validate,
    AccommodateSensory,
    OfferOptions,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Validate => "validate",
            Strategy::AccommodateSensory => "accommodate-sensory",
            Strategy::OfferOptions => "offer-options",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = ContractViolation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "validate" => Ok(Strategy::Validate),
            "accommodate-sensory" => Ok(Strategy::AccommodateSensory),
            "offer-options" => Ok(Strategy::OfferOptions),
            other => Err(ContractViolation::new(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub strategy: Strategy,
    pub text: String,
}

/// Interpreter explanation plus coach suggestions for one trigger turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportPayload {
    pub interpretation: String,
    pub suggestions: Vec<Suggestion>,
    pub triggering_delta: i32,
}

impl SupportPayload {
    pub const MAX_SUGGESTIONS: usize = 3;

    pub fn new(
        interpretation: String,
        suggestions: Vec<Suggestion>,
        triggering_delta: i32,
    ) -> Result<Self, ContractViolation> {
        if interpretation.trim().is_empty() {
            return Err(ContractViolation::new("interpretation must be nonempty"));
        }
        if suggestions.is_empty() || suggestions.len() > Self::MAX_SUGGESTIONS {
            return Err(ContractViolation::new(format!(
                "support payload needs 1-3 suggestions, got {}",
                suggestions.len()
            )));
        }
        Ok(Self {
            interpretation,
            suggestions,
            triggering_delta,
        })
    }
}
