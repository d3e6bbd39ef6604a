//! Blocked randomization within gender x contact-frequency strata.
//!
//! Each stratum is filled in blocks of two: the first session of a block gets
//! a coin-flip condition, the second gets the other one. Group sizes inside a
//! stratum therefore never differ by more than one.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Woman,
    Man,
    NonBinary,
    Undisclosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactFrequency {
    LowModerate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StratumKey {
    pub gender: Gender,
    pub contact_frequency: ContactFrequency,
}

impl StratumKey {
    pub fn new(gender: Gender, contact_frequency: ContactFrequency) -> Self {
        Self {
            gender,
            contact_frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    pub baseline: usize,
    pub neurowise: usize,
}

impl ArmCounts {
    pub fn imbalance(&self) -> usize {
        self.baseline.abs_diff(self.neurowise)
    }

    fn bump(&mut self, c: Condition) {
        match c {
            Condition::Baseline => self.baseline += 1,
            Condition::NeuroWise => self.neurowise += 1,
        }
    }
}

#[derive(Debug, Default, Clone)]
struct StratumState {
    /// Condition owed to the second slot of an open block.
    pending: Option<Condition>,
    counts: ArmCounts,
}

#[derive(Debug)]
pub struct BlockRandomizer {
    rng: ChaCha8Rng,
    strata: BTreeMap<StratumKey, StratumState>,
}

impl BlockRandomizer {
    pub fn new(seed: Option<u64>) -> Self {
        let rng = match seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_os_rng(),
        };
        Self {
            rng,
            strata: BTreeMap::new(),
        }
    }

    pub fn assign(&mut self, stratum: StratumKey) -> Condition {
        let state = self.strata.entry(stratum).or_default();
        let condition = match state.pending.take() {
            Some(c) => c,
            None => {
                let first = if self.rng.random_bool(0.5) {
                    Condition::NeuroWise
                } else {
                    Condition::Baseline
                };
                state.pending = Some(first.other());
                first
            }
        };
        state.counts.bump(condition);
        condition
    }

    pub fn counts(&self) -> BTreeMap<StratumKey, ArmCounts> {
        self.strata.iter().map(|(k, v)| (*k, v.counts)).collect()
    }

    /// 128 random bits as lowercase hex.
    pub fn session_id(&mut self) -> String {
        format!("{:032x}", self.rng.random::<u128>())
    }
}
