#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use neurowise_core::agents::{AgentSuite, ChatProvider, MockProvider, ProviderError, ProviderRequest, ProviderResponse};
use neurowise_core::config::ServiceConfig;
use neurowise_core::orchestrator::Orchestrator;

/// Wraps the mock provider and fails calls chosen by a seeded schedule.
pub struct FaultyProvider {
    inner: MockProvider,
    calls: AtomicU64,
    /// A call fails when `hash(seed, call) % period == 0`; 0 never fails.
    period: u64,
    seed: u64,
}

impl FaultyProvider {
    pub fn new(period: u64, seed: u64) -> Self {
        Self {
            inner: MockProvider::bundled(),
            calls: AtomicU64::new(0),
            period,
            seed,
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51afd7ed558ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ceb9fe1a85ec53);
    x ^ (x >> 33)
}

#[async_trait]
impl ChatProvider for FaultyProvider {
    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if self.period > 0 && mix(self.seed ^ n.wrapping_mul(0x9e3779b97f4a7c15)).is_multiple_of(self.period) {
            return Err(ProviderError::Transient {
                status: 503,
                attempts: 3,
            });
        }
        self.inner.complete(request).await
    }

    fn name(&self) -> &str {
        "faulty-mock"
    }
}

/// Mock provider that sleeps before answering, to hold a turn open.
pub struct SlowProvider {
    inner: MockProvider,
    delay: Duration,
}

impl SlowProvider {
    pub fn new(delay: Duration) -> Self {
        Self {
            inner: MockProvider::bundled(),
            delay,
        }
    }
}

#[async_trait]
impl ChatProvider for SlowProvider {
    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        tokio::time::sleep(self.delay).await;
        self.inner.complete(request).await
    }

    fn name(&self) -> &str {
        "slow-mock"
    }
}

pub fn config_with_seed(seed: u64) -> ServiceConfig {
    let mut c = ServiceConfig::bundled();
    c.assignment.seed = Some(seed);
    c
}

pub fn mock_orchestrator(seed: u64) -> Orchestrator {
    Orchestrator::new(config_with_seed(seed), AgentSuite::bundled(), Arc::new(MockProvider::bundled()))
}

pub fn orchestrator_with(config: ServiceConfig, provider: Arc<dyn ChatProvider>) -> Orchestrator {
    Orchestrator::new(config, AgentSuite::bundled(), provider)
}

/// Messages a user might plausibly send, spanning every category.
pub const USER_LINES: &[&str] = &[
    "I understand, that must be hard.",
    "It's just food, calm down.",
    "We could order pizza if you prefer.",
    "I will open the window and turn on the fan.",
    "You need to eat right now.",
    "Okay.",
    "Dinner is on the table.",
    "You're overreacting, it is not a big deal.",
    "Would you like to eat in the other room?",
    "I hear you. Routines matter.",
    "Come on, hurry up.",
    "Whatever.",
    "Sorry, I forgot it was Friday.",
    "Do you want me to put the lid on it?",
    "Stop complaining.",
];
