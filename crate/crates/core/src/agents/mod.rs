//! Partner, Interpreter and Coach agents over a pluggable chat-completion
//! provider, plus a deterministic mock provider for offline runs.

mod mock;
mod openai;
mod provider;
mod roles;
mod template;

pub use mock::{InterpreterKey, MockProvider, MockTables, TemplateKey};
pub use openai::{OpenAiCompatibleProvider, RetryPolicy, API_KEY_ENV};
pub use provider::{
    AgentRole, ChatMessage, ChatProvider, ChatRole, FinishReason, ProviderError, ProviderRequest,
    ProviderResponse, RequestTags,
};
pub use roles::{
    generate_coaching, generate_interpretation, generate_partner_reply, parse_coaching, AgentError,
    ConversationContext,
};
pub(crate) use roles::build_request;
pub use template::{AgentSpec, AgentSuite, PromptTemplate, TemplateError, PLACEHOLDERS};
