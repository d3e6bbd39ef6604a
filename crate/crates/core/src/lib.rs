//! Conversation practice with a stress-conditioned simulated partner, plus the
//! statistics used to validate the stress estimator and analyze study data.

pub mod agents;
pub mod config;
pub mod corpus;
pub mod domain;
pub mod orchestrator;
pub mod psychometrics;
pub mod stress;

pub use domain::{
    band_of, BandThresholds, CommunicationCategory, Condition, ContractViolation, Message, Role,
    ScenarioConfig, StressBand, StressState, Strategy, Suggestion, SupportPayload,
};
