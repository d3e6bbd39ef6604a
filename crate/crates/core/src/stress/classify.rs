use std::collections::BTreeMap;

use serde::Deserialize;
use tracing::warn;

use super::{ClassificationResult, StressError};
use crate::agents::{build_request, AgentRole, AgentSuite, ChatMessage, ChatProvider, ConversationContext, RequestTags};
use crate::domain::{CommunicationCategory, ContractViolation, Message, ScenarioConfig};

#[derive(Deserialize)]
struct Wire {
    categories: Vec<String>,
    #[serde(default)]
    rationale: String,
}

/// Parses the classifier's `{"categories": [...], "rationale": "..."}` answer.
///
/// Returns `None` when the content is not that shape or names an unknown
/// category.
pub fn parse_classification(content: &str) -> Option<ClassificationResult> {
    let start = content.find('{')?;
    let end = content.rfind('}')?;
    if end < start {
        return None;
    }
    let wire: Wire = serde_json::from_str(&content[start..=end]).ok()?;
    let cats = wire
        .categories
        .iter()
        .map(|c| c.parse::<CommunicationCategory>())
        .collect::<Result<Vec<_>, _>>()
        .ok()?;
    Some(ClassificationResult::new(cats, wire.rationale))
}

/// Classifies one user message through the provider.
///
/// Unparseable output degrades to `{Neutral}` with a warning; transport
/// failures (after the provider's own retries) reject the turn.
pub async fn classify_message(
    text: &str,
    context: &[Message],
    scenario: &ScenarioConfig,
    suite: &AgentSuite,
    provider: &dyn ChatProvider,
) -> Result<ClassificationResult, StressError> {
    if text.trim().is_empty() {
        return Err(ContractViolation::new("cannot classify an empty message").into());
    }
    let ctx = ConversationContext::new(scenario, context);
    let spec = &suite.classifier;
    let mut b = BTreeMap::new();
    b.insert("persona", scenario.persona_brief.clone());
    b.insert("sensory_triggers", scenario.sensory_triggers.join(", "));
    b.insert("recent_transcript", ctx.transcript(suite.context_window));
    b.insert("categories", String::new());
    let system = spec.system_prompt_template.render(&b)?;
    let request = build_request(
        spec,
        system,
        vec![ChatMessage::user(text)],
        RequestTags::new(AgentRole::Classifier),
    )?;
    let response = provider
        .complete(&request)
        .await
        .map_err(StressError::ClassificationUnavailable)?;
    Ok(parse_classification(&response.content).unwrap_or_else(|| {
        warn!(content = %response.content, "unparseable classifier output, scoring as neutral");
        ClassificationResult::neutral("unparseable classifier output")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CommunicationCategory::*;

    #[test]
    fn parses_with_surrounding_prose() {
        let r = parse_classification("```json\n{\"categories\": [\"pressure\", \"validation\"], \"rationale\": \"r\"}\n```").unwrap();
        assert_eq!(r.category_list(), vec![Validation, Pressure]);
        assert_eq!(r.rationale, "r");
    }

    #[test]
    fn rejects_unknown_or_malformed() {
        assert!(parse_classification("{\"categories\": [\"rude\"]}").is_none());
        assert!(parse_classification("validation").is_none());
        assert!(parse_classification("} {").is_none());
    }

    #[test]
    fn empty_list_is_neutral() {
        assert!(parse_classification("{\"categories\": []}").unwrap().is_neutral());
    }
}
