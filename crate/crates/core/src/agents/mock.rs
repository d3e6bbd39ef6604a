//! Deterministic offline provider.
//!
//! Classification comes from the keyword lexicon; every generative role draws
//! from a tagged template table. The template index is derived from a SHA-256
//! digest of the whole request, so identical requests always produce
//! byte-identical responses and novel inputs still get a sensible reply.

use std::collections::BTreeMap;
use std::path::Path;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::provider::{
    AgentRole, ChatProvider, FinishReason, ProviderError, ProviderRequest, ProviderResponse,
};
use crate::domain::{CommunicationCategory, StressBand, Strategy};
use crate::stress::Lexicon;

/// Which template set a mock reply came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "agent", content = "key")]
pub enum TemplateKey {
    Partner(StressBand),
    Interpreter(InterpreterKey),
    Coach(Strategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpreterKey {
    Invalidation,
    Pressure,
    General,
}

impl TemplateKey {
    pub const ALL: [TemplateKey; 9] = [
        TemplateKey::Partner(StressBand::Calm),
        TemplateKey::Partner(StressBand::Elevated),
        TemplateKey::Partner(StressBand::High),
        TemplateKey::Interpreter(InterpreterKey::Pressure),
        TemplateKey::Interpreter(InterpreterKey::Invalidation),
        TemplateKey::Interpreter(InterpreterKey::General),
        TemplateKey::Coach(Strategy::Validate),
        TemplateKey::Coach(Strategy::OfferOptions),
        TemplateKey::Coach(Strategy::AccommodateSensory),
    ];

    /// File name of the template set inside a template directory.
    pub fn file_name(self) -> &'static str {
        match self {
            TemplateKey::Partner(StressBand::Calm) => "partner_calm.txt",
            TemplateKey::Partner(StressBand::Elevated) => "partner_elevated.txt",
            TemplateKey::Partner(StressBand::High) => "partner_high.txt",
            TemplateKey::Interpreter(InterpreterKey::Pressure) => "interpreter_pressure.txt",
            TemplateKey::Interpreter(InterpreterKey::Invalidation) => "interpreter_invalidation.txt",
            TemplateKey::Interpreter(InterpreterKey::General) => "interpreter_general.txt",
            TemplateKey::Coach(Strategy::Validate) => "coach_validate.txt",
            TemplateKey::Coach(Strategy::OfferOptions) => "coach_offer_options.txt",
            TemplateKey::Coach(Strategy::AccommodateSensory) => "coach_accommodate_sensory.txt",
        }
    }

    fn bundled_source(self) -> &'static str {
        match self {
            TemplateKey::Partner(StressBand::Calm) => include_str!("../../assets/templates/partner_calm.txt"),
            TemplateKey::Partner(StressBand::Elevated) => {
                include_str!("../../assets/templates/partner_elevated.txt")
            }
            TemplateKey::Partner(StressBand::High) => include_str!("../../assets/templates/partner_high.txt"),
            TemplateKey::Interpreter(InterpreterKey::Pressure) => {
                include_str!("../../assets/templates/interpreter_pressure.txt")
            }
            TemplateKey::Interpreter(InterpreterKey::Invalidation) => {
                include_str!("../../assets/templates/interpreter_invalidation.txt")
            }
            TemplateKey::Interpreter(InterpreterKey::General) => {
                include_str!("../../assets/templates/interpreter_general.txt")
            }
            TemplateKey::Coach(Strategy::Validate) => include_str!("../../assets/templates/coach_validate.txt"),
            TemplateKey::Coach(Strategy::OfferOptions) => {
                include_str!("../../assets/templates/coach_offer_options.txt")
            }
            TemplateKey::Coach(Strategy::AccommodateSensory) => {
                include_str!("../../assets/templates/coach_accommodate_sensory.txt")
            }
        }
    }
}

fn parse_template_lines(source: &str) -> Vec<String> {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone)]
pub struct MockTables {
    pub lexicon: Lexicon,
    templates: BTreeMap<TemplateKey, Vec<String>>,
}

impl MockTables {
    pub fn bundled() -> Self {
        let templates = TemplateKey::ALL
            .into_iter()
            .map(|k| (k, parse_template_lines(k.bundled_source())))
            .collect();
        Self {
            lexicon: Lexicon::bundled(),
            templates,
        }
    }

    /// Loads `lexicon.tsv` and one file per template key from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, ProviderError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| ProviderError::Config(format!("{}: {e}", dir.join(name).display())))
        };
        let lexicon = Lexicon::parse(&read("lexicon.tsv")?)
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        let mut templates = BTreeMap::new();
        for key in TemplateKey::ALL {
            let lines = parse_template_lines(&read(key.file_name())?);
            if lines.is_empty() {
                return Err(ProviderError::Config(format!("{} has no templates", key.file_name())));
            }
            templates.insert(key, lines);
        }
        Ok(Self { lexicon, templates })
    }

    pub fn templates(&self, key: TemplateKey) -> &[String] {
        self.templates.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
pub struct MockProvider {
    tables: MockTables,
}

impl Default for MockProvider {
    fn default() -> Self {
        Self::bundled()
    }
}

impl MockProvider {
    pub fn new(tables: MockTables) -> Self {
        Self { tables }
    }

    pub fn bundled() -> Self {
        Self::new(MockTables::bundled())
    }

    pub fn tables(&self) -> &MockTables {
        &self.tables
    }

    /// Identifies the template set a reply (or one sentence group of an
    /// interpretation) was drawn from.
    pub fn template_origin(&self, text: &str) -> Option<TemplateKey> {
        TemplateKey::ALL.into_iter().find(|k| {
            self.tables
                .templates(*k)
                .iter()
                .any(|t| template_matches(t, text))
        })
    }

    /// Every template key whose output occurs inside `text`.
    pub fn origins_within(&self, text: &str) -> Vec<TemplateKey> {
        TemplateKey::ALL
            .into_iter()
            .filter(|k| {
                self.tables.templates(*k).iter().any(|t| match t.split_once("{categories}") {
                    None => text.contains(t.as_str()),
                    Some((pre, post)) => text.contains(pre) && text.contains(post),
                })
            })
            .collect()
    }

    fn pick(&self, key: TemplateKey, seed: u64) -> Result<&str, ProviderError> {
        let set = self.tables.templates(key);
        if set.is_empty() {
            return Err(ProviderError::Config(format!("no templates for {key:?}")));
        }
        let idx = usize::try_from(seed % set.len() as u64).expect("index fits usize");
        Ok(&set[idx])
    }

    fn respond(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let seed = request_seed(request);
        match request.tags.agent {
            AgentRole::Classifier => {
                let text = request
                    .last_user_content()
                    .ok_or_else(|| ProviderError::Malformed("classifier request has no user message".into()))?;
                let result = self.tables.lexicon.classify(text);
                Ok(json!({
                    "categories": result.category_list(),
                    "rationale": result.rationale,
                })
                .to_string())
            }
            AgentRole::Partner => {
                let band = request.tags.stress_band.unwrap_or(StressBand::Elevated);
                Ok(self.pick(TemplateKey::Partner(band), seed)?.to_string())
            }
            AgentRole::Interpreter => {
                let cats = &request.tags.categories;
                let mut keys = Vec::new();
                if cats.contains(&CommunicationCategory::Invalidation) {
                    keys.push(InterpreterKey::Invalidation);
                }
                if cats.contains(&CommunicationCategory::Pressure) {
                    keys.push(InterpreterKey::Pressure);
                }
                if keys.is_empty() {
                    keys.push(InterpreterKey::General);
                }
                let listed = category_phrase(cats);
                let parts = keys
                    .into_iter()
                    .enumerate()
                    .map(|(i, k)| {
                        self.pick(TemplateKey::Interpreter(k), seed.rotate_left(8 * i as u32))
                            .map(|t| t.replace("{categories}", &listed))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(parts.join(" "))
            }
            AgentRole::Coach => {
                let cats = &request.tags.categories;
                let mut strategies = Vec::new();
                if cats.contains(&CommunicationCategory::Invalidation) {
                    strategies.push(Strategy::Validate);
                }
                if cats.contains(&CommunicationCategory::Pressure) {
                    strategies.push(Strategy::OfferOptions);
                }
                strategies.push(Strategy::AccommodateSensory);
                if strategies.len() == 1 {
                    strategies.insert(0, Strategy::Validate);
                }
                let suggestions = strategies
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        self.pick(TemplateKey::Coach(s), seed.rotate_left(8 * i as u32))
                            .map(|t| json!({ "strategy": s, "text": t }))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(json!({ "suggestions": suggestions }).to_string())
            }
        }
    }
}

fn template_matches(template: &str, text: &str) -> bool {
    match template.split_once("{categories}") {
        None => template == text,
        Some((pre, post)) => text.starts_with(pre) && text.ends_with(post),
    }
}

fn category_phrase(cats: &[CommunicationCategory]) -> String {
    if cats.is_empty() {
        return "neutral".to_string();
    }
    cats.iter()
        .map(|c| c.as_str().replace('_', " "))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn request_seed(request: &ProviderRequest) -> u64 {
    let canonical = serde_json::to_vec(request).expect("request serializes");
    let digest = Sha256::digest(&canonical);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[async_trait]
impl ChatProvider for MockProvider {
    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let content = self.respond(request)?;
        Ok(ProviderResponse {
            content,
            finish_reason: FinishReason::Stop,
            latency_ms: 0,
        })
    }

    fn name(&self) -> &str {
        "mock"
    }
}
