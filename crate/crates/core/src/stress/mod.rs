//! Hybrid stress estimation: a provider classifies each user message into
//! communication categories, then a rule table turns categories into a
//! bounded stress delta.

mod classify;
mod lexicon;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::ProviderError;
use crate::domain::{BandThresholds, CommunicationCategory, ContractViolation, StressState};

pub use classify::{classify_message, parse_classification};
pub use lexicon::{normalize_text, Lexicon, LexiconError, LexiconMatch};

#[derive(Debug, Error)]
pub enum StressError {
    #[error(transparent)]
    Contract(#[from] ContractViolation),
    #[error("classification unavailable: {0}")]
    ClassificationUnavailable(#[source] ProviderError),
    #[error("classifier prompt: {0}")]
    Template(#[from] crate::agents::TemplateError),
}

/// Categories detected in one user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    categories: BTreeSet<CommunicationCategory>,
    pub rationale: String,
}

impl ClassificationResult {
    /// Builds a result, dropping `Neutral` when other categories are present.
    /// An empty set becomes `{Neutral}`.
    pub fn new(
        categories: impl IntoIterator<Item = CommunicationCategory>,
        rationale: impl Into<String>,
    ) -> Self {
        let mut categories: BTreeSet<_> = categories.into_iter().collect();
        if categories.len() > 1 {
            categories.remove(&CommunicationCategory::Neutral);
        }
        if categories.is_empty() {
            categories.insert(CommunicationCategory::Neutral);
        }
        Self {
            categories,
            rationale: rationale.into(),
        }
    }

    pub fn neutral(rationale: impl Into<String>) -> Self {
        Self::new([CommunicationCategory::Neutral], rationale)
    }

    pub fn categories(&self) -> &BTreeSet<CommunicationCategory> {
        &self.categories
    }

    pub fn category_list(&self) -> Vec<CommunicationCategory> {
        self.categories.iter().copied().collect()
    }

    pub fn contains(&self, c: CommunicationCategory) -> bool {
        self.categories.contains(&c)
    }

    pub fn is_neutral(&self) -> bool {
        self.categories.len() == 1 && self.contains(CommunicationCategory::Neutral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
    /// Largest-magnitude delta wins; on a magnitude tie the increase wins.
    MostExtreme,
}

/// Rule-based deltas per category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub deltas: BTreeMap<CommunicationCategory, i32>,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Per-turn bound on the aggregated delta, applied before clamping.
    #[serde(default = "default_per_turn_cap")]
    pub per_turn_cap: u32,
}

fn default_per_turn_cap() -> u32 {
    20
}

impl Default for DeltaTable {
    fn default() -> Self {
        use CommunicationCategory::*;
        Self {
            deltas: BTreeMap::from([
                (Validation, -10),
                (OptionsGiving, -8),
                (SensoryAccommodation, -8),
                (Neutral, 0),
                (Pressure, 12),
                (Invalidation, 15),
            ]),
            aggregation: Aggregation::Sum,
            per_turn_cap: default_per_turn_cap(),
        }
    }
}

impl DeltaTable {
    pub fn delta_for(&self, c: CommunicationCategory) -> i32 {
        self.deltas.get(&c).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ContractViolation> {
        use CommunicationCategory::*;
        for c in CommunicationCategory::ALL {
            let d = self.delta_for(c);
            let ok = match c {
                Validation | OptionsGiving | SensoryAccommodation => d <= 0,
                Invalidation | Pressure => d >= 0,
                Neutral => d == 0,
            };
            if !ok {
                return Err(ContractViolation::new(format!(
                    "delta table: {c} has delta {d} with the wrong sign"
                )));
            }
        }
        if self.per_turn_cap == 0 {
            return Err(ContractViolation::new("delta table: per_turn_cap must be positive"));
        }
        Ok(())
    }

    /// Aggregated, per-turn-capped delta for a classification (before clamping).
    pub fn aggregate(&self, classification: &ClassificationResult) -> i32 {
        let deltas = classification.categories().iter().map(|c| self.delta_for(*c));
        let raw = match self.aggregation {
            Aggregation::Sum => deltas.sum(),
            Aggregation::MostExtreme => deltas
                .max_by(|a, b| a.abs().cmp(&b.abs()).then(a.cmp(b)))
                .unwrap_or(0),
        };
        let cap = i32::try_from(self.per_turn_cap).unwrap_or(i32::MAX);
        raw.clamp(-cap, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerPolicy {
    pub min_increase: u32,
}

impl Default for TriggerPolicy {
    fn default() -> Self {
        Self { min_increase: 10 }
    }
}

impl TriggerPolicy {
    pub fn new(min_increase: u32) -> Result<Self, ContractViolation> {
        let p = Self { min_increase };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ContractViolation> {
        if self.min_increase == 0 {
            return Err(ContractViolation::new("trigger policy: min_increase must be >= 1"));
        }
        Ok(())
    }
}

/// Applies the classification's delta to `state` and clamps to [0, 100].
///
/// Returns the new state and the delta that was actually applied after clamping.
pub fn update_stress(
    state: &StressState,
    classification: &ClassificationResult,
    table: &DeltaTable,
    bands: &BandThresholds,
) -> (StressState, i32) {
    let old = i32::from(state.level);
    let new = (old + table.aggregate(classification)).clamp(0, 100);
    let applied = new - old;
    let level = u8::try_from(new).expect("clamped to [0, 100]");
    let band = bands
        .band_of(i64::from(level))
        .expect("clamped level is always in range");
    (
        StressState {
            level,
            band,
            last_delta: applied,
        },
        applied,
    )
}

/// True iff the post-clamp increase meets the policy threshold (inclusive).
pub fn should_trigger_support(applied_delta: i32, policy: &TriggerPolicy) -> bool {
    i64::from(applied_delta) >= i64::from(policy.min_increase.max(1))
}
