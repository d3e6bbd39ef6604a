//! `{placeholder}` prompt templates.
//!
//! A `{` immediately followed by an identifier and `}` is a placeholder; any
//! other brace is literal text, so JSON examples inside prompts need no escaping.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::provider::AgentRole;

pub const PLACEHOLDERS: [&str; 6] = [
    "persona",
    "stress_band",
    "stress_level",
    "sensory_triggers",
    "recent_transcript",
    "categories",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("placeholder {{{0}}} is not bound")]
    Unbound(String),
    #[error("agent spec: {0}")]
    InvalidSpec(String),
    #[error("reading template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Placeholder(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    segments: Vec<Segment>,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl PromptTemplate {
    /// Parses with the standard agent placeholder set.
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        Self::parse_with(source, &PLACEHOLDERS)
    }

    pub fn parse_with(source: &str, allowed: &[&str]) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = source;
        while let Some(open) = rest.find('{') {
            literal.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let ident_len = after.find(|c: char| !is_ident_char(c)).unwrap_or(after.len());
            let closes = after[ident_len..].starts_with('}');
            let starts_alpha = after.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
            if ident_len > 0 && closes && starts_alpha {
                let name = &after[..ident_len];
                if !allowed.contains(&name) {
                    return Err(TemplateError::UnknownPlaceholder(name.to_string()));
                }
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Placeholder(name.to_string()));
                rest = &after[ident_len + 1..];
            } else {
                literal.push('{');
                rest = after;
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(Self { segments })
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Placeholder(p) => Some(p.as_str()),
            Segment::Literal(_) => None,
        })
    }

    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Placeholder(p) => out.push_str(
                    bindings
                        .get(p.as_str())
                        .ok_or_else(|| TemplateError::Unbound(p.clone()))?,
                ),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub role: AgentRole,
    pub system_prompt_template: PromptTemplate,
    pub max_reply_tokens: u32,
    pub temperature: f32,
}

impl AgentSpec {
    pub fn new(
        role: AgentRole,
        template: &str,
        max_reply_tokens: u32,
        temperature: f32,
    ) -> Result<Self, TemplateError> {
        if max_reply_tokens == 0 {
            return Err(TemplateError::InvalidSpec("max_reply_tokens must be positive".into()));
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(TemplateError::InvalidSpec(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        Ok(Self {
            role,
            system_prompt_template: PromptTemplate::parse(template)?,
            max_reply_tokens,
            temperature,
        })
    }
}

/// Prompt specs for every role plus the transcript window shown to agents.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSuite {
    pub classifier: AgentSpec,
    pub partner: AgentSpec,
    pub interpreter: AgentSpec,
    pub coach: AgentSpec,
    pub context_window: usize,
}

const DEFAULT_CONTEXT_WINDOW: usize = 6;

impl AgentSuite {
    fn from_sources(
        classifier: &str,
        partner: &str,
        interpreter: &str,
        coach: &str,
    ) -> Result<Self, TemplateError> {
        Ok(Self {
            classifier: AgentSpec::new(AgentRole::Classifier, classifier, 200, 0.0)?,
            partner: AgentSpec::new(AgentRole::Partner, partner, 160, 0.7)?,
            interpreter: AgentSpec::new(AgentRole::Interpreter, interpreter, 220, 0.2)?,
            coach: AgentSpec::new(AgentRole::Coach, coach, 260, 0.2)?,
            context_window: DEFAULT_CONTEXT_WINDOW,
        })
    }

    pub fn bundled() -> Self {
        Self::from_sources(
            include_str!("../../assets/prompts/classifier.txt"),
            include_str!("../../assets/prompts/partner.txt"),
            include_str!("../../assets/prompts/interpreter.txt"),
            include_str!("../../assets/prompts/coach.txt"),
        )
        .expect("bundled prompts parse")
    }

    /// Loads `classifier.txt`, `partner.txt`, `interpreter.txt` and `coach.txt`.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        };
        Self::from_sources(
            &read("classifier.txt")?,
            &read("partner.txt")?,
            &read("interpreter.txt")?,
            &read("coach.txt")?,
        )
    }

    pub fn spec(&self, role: AgentRole) -> &AgentSpec {
        match role {
            AgentRole::Classifier => &self.classifier,
            AgentRole::Partner => &self.partner,
            AgentRole::Interpreter => &self.interpreter,
            AgentRole::Coach => &self.coach,
        }
    }
}
