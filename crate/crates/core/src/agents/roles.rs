use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::Deserialize;
use thiserror::Error;
use tracing::warn;

use super::provider::{AgentRole, ChatMessage, ChatProvider, ProviderError, ProviderRequest, RequestTags};
use super::template::{AgentSpec, AgentSuite, TemplateError};
use crate::domain::{
    CommunicationCategory, ContractViolation, Message, Role, ScenarioConfig, StressState, Strategy,
    Suggestion, SupportPayload,
};
use crate::stress::{should_trigger_support, TriggerPolicy};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Contract(#[from] ContractViolation),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{0:?} agent returned an empty reply")]
    EmptyReply(AgentRole),
    #[error("coach returned no usable suggestions")]
    EmptySuggestions,
}

/// What the agents see of a session.
#[derive(Debug, Clone, Copy)]
pub struct ConversationContext<'a> {
    pub scenario: &'a ScenarioConfig,
    pub messages: &'a [Message],
}

impl<'a> ConversationContext<'a> {
    pub fn new(scenario: &'a ScenarioConfig, messages: &'a [Message]) -> Self {
        Self { scenario, messages }
    }

    fn recent(&self, window: usize) -> &'a [Message] {
        let start = self.messages.len().saturating_sub(window);
        &self.messages[start..]
    }

    /// Last `window` messages as `Alex: ...` / `You: ...` lines.
    pub fn transcript(&self, window: usize) -> String {
        self.recent(window)
            .iter()
            .map(|m| match m.role {
                Role::Partner => format!("Alex: {}", m.text),
                Role::User => format!("You: {}", m.text),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn category_list(categories: &[CommunicationCategory]) -> String {
    if categories.is_empty() {
        "none".to_string()
    } else {
        categories.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
    }
}

fn bindings(
    ctx: &ConversationContext<'_>,
    stress: Option<&StressState>,
    categories: &[CommunicationCategory],
    window: usize,
) -> BTreeMap<&'static str, String> {
    let mut b = BTreeMap::new();
    b.insert("persona", ctx.scenario.persona_brief.clone());
    b.insert("sensory_triggers", ctx.scenario.sensory_triggers.join(", "));
    b.insert("recent_transcript", ctx.transcript(window));
    b.insert("categories", category_list(categories));
    if let Some(s) = stress {
        b.insert("stress_level", s.level.to_string());
        b.insert("stress_band", s.band.to_string());
    }
    b
}

pub(crate) fn build_request(
    spec: &AgentSpec,
    system: String,
    turns: Vec<ChatMessage>,
    tags: RequestTags,
) -> Result<ProviderRequest, ContractViolation> {
    let mut messages = Vec::with_capacity(turns.len() + 1);
    messages.push(ChatMessage::system(system));
    messages.extend(turns);
    ProviderRequest::new(messages, spec.temperature, spec.max_reply_tokens, tags)
}

/// Recent history in chat-role form: the partner speaks as the assistant.
fn chat_history(ctx: &ConversationContext<'_>, window: usize) -> Vec<ChatMessage> {
    ctx.recent(window)
        .iter()
        .map(|m| match m.role {
            Role::Partner => ChatMessage::assistant(&m.text),
            Role::User => ChatMessage::user(&m.text),
        })
        .collect()
}

/// Produces Alex's next message, conditioned on the (already updated) stress band.
///
/// With an empty context this is the scenario opener, verbatim and without a
/// provider call.
pub async fn generate_partner_reply(
    suite: &AgentSuite,
    ctx: &ConversationContext<'_>,
    stress: &StressState,
    last_categories: &[CommunicationCategory],
    provider: &dyn ChatProvider,
    now: DateTime<Utc>,
) -> Result<Message, AgentError> {
    let Some(last) = ctx.messages.last() else {
        return Ok(Message::new(Role::Partner, ctx.scenario.opener_text.clone(), 0, now)?);
    };
    if last.role != Role::User {
        return Err(ContractViolation::new("partner reply requires the last message to be from the user").into());
    }
    let spec = &suite.partner;
    let system = spec
        .system_prompt_template
        .render(&bindings(ctx, Some(stress), last_categories, suite.context_window))?;
    let tags = RequestTags {
        agent: AgentRole::Partner,
        stress_band: Some(stress.band),
        categories: last_categories.to_vec(),
    };
    let request = build_request(spec, system, chat_history(ctx, suite.context_window), tags)?;
    let response = provider.complete(&request).await?;
    let text = response.content.trim();
    if text.is_empty() {
        return Err(AgentError::EmptyReply(AgentRole::Partner));
    }
    Ok(Message::new(Role::Partner, text, last.turn_index + 1, now)?)
}

fn require_trigger(applied_delta: i32, policy: &TriggerPolicy, who: &str) -> Result<(), ContractViolation> {
    if should_trigger_support(applied_delta, policy) {
        Ok(())
    } else {
        Err(ContractViolation::new(format!(
            "{who} called without a trigger (delta {applied_delta}, threshold {})",
            policy.min_increase
        )))
    }
}

fn support_request(
    spec: &AgentSpec,
    suite: &AgentSuite,
    ctx: &ConversationContext<'_>,
    stress: &StressState,
    categories: &[CommunicationCategory],
) -> Result<ProviderRequest, AgentError> {
    let system = spec
        .system_prompt_template
        .render(&bindings(ctx, Some(stress), categories, suite.context_window))?;
    let last_user = ctx
        .messages
        .iter()
        .rev()
        .find(|m| m.role == Role::User)
        .map(|m| m.text.clone())
        .unwrap_or_default();
    let tags = RequestTags {
        agent: spec.role,
        stress_band: Some(stress.band),
        categories: categories.to_vec(),
    };
    let turns = if last_user.is_empty() {
        vec![ChatMessage::user("(no user message)")]
    } else {
        vec![ChatMessage::user(last_user)]
    };
    Ok(build_request(spec, system, turns, tags)?)
}

/// Explains what the partner may be experiencing after a stress increase.
pub async fn generate_interpretation(
    suite: &AgentSuite,
    ctx: &ConversationContext<'_>,
    stress: &StressState,
    applied_delta: i32,
    categories: &[CommunicationCategory],
    policy: &TriggerPolicy,
    provider: &dyn ChatProvider,
) -> Result<String, AgentError> {
    require_trigger(applied_delta, policy, "interpreter")?;
    let request = support_request(&suite.interpreter, suite, ctx, stress, categories)?;
    let response = provider.complete(&request).await?;
    let text = response.content.trim();
    if text.is_empty() {
        return Err(AgentError::EmptyReply(AgentRole::Interpreter));
    }
    Ok(text.to_string())
}

#[derive(Deserialize)]
struct CoachWire {
    #[serde(default)]
    suggestions: Vec<CoachWireItem>,
}

#[derive(Deserialize)]
struct CoachWireItem {
    strategy: String,
    text: String,
}

/// Parses `{"suggestions": [{"strategy", "text"}]}`, tolerating prose around
/// the JSON object. Items with unknown strategies or empty text are dropped;
/// at most three are kept.
pub fn parse_coaching(content: &str) -> Vec<Suggestion> {
    let (Some(start), Some(end)) = (content.find('{'), content.rfind('}')) else {
        return Vec::new();
    };
    if end < start {
        return Vec::new();
    }
    let Ok(wire) = serde_json::from_str::<CoachWire>(&content[start..=end]) else {
        return Vec::new();
    };
    wire.suggestions
        .into_iter()
        .filter_map(|item| {
            let strategy: Strategy = item.strategy.parse().ok()?;
            let text = item.text.trim();
            (!text.is_empty()).then(|| Suggestion {
                strategy,
                text: text.to_string(),
            })
        })
        .take(SupportPayload::MAX_SUGGESTIONS)
        .collect()
}

/// One to three tagged suggestions for the user's next message.
pub async fn generate_coaching(
    suite: &AgentSuite,
    ctx: &ConversationContext<'_>,
    stress: &StressState,
    applied_delta: i32,
    categories: &[CommunicationCategory],
    policy: &TriggerPolicy,
    provider: &dyn ChatProvider,
) -> Result<Vec<Suggestion>, AgentError> {
    require_trigger(applied_delta, policy, "coach")?;
    let request = support_request(&suite.coach, suite, ctx, stress, categories)?;
    let response = provider.complete(&request).await?;
    let suggestions = parse_coaching(&response.content);
    if suggestions.is_empty() {
        warn!(content = %response.content, "coach produced no usable suggestions");
        return Err(AgentError::EmptySuggestions);
    }
    Ok(suggestions)
}
