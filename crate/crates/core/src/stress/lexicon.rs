//! Keyword lexicon backing the deterministic mock classifier.
//!
//! File format: one `category<TAB>phrase` entry per line, UTF-8. Blank lines
//! and lines starting with `#` are ignored.

use thiserror::Error;

use crate::domain::CommunicationCategory;

use super::ClassificationResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon line {line}: expected `category<TAB>phrase`")]
    MissingTab { line: usize },
    #[error("lexicon line {line}: unknown category '{category}'")]
    UnknownCategory { line: usize, category: String },
    #[error("lexicon line {line}: neutral is the fallback and cannot carry phrases")]
    NeutralPhrase { line: usize },
    #[error("lexicon line {line}: phrase is empty after normalization")]
    EmptyPhrase { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconMatch<'a> {
    pub category: CommunicationCategory,
    pub phrase: &'a str,
}

#[derive(Debug, Clone)]
struct Entry {
    category: CommunicationCategory,
    phrase: String,
    // space-padded normalized form
    needle: String,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<Entry>,
}

/// Lowercases, drops apostrophes, maps every other non-alphanumeric char to a
/// space and collapses runs of whitespace.
pub fn normalize_text(text: &str) -> String {
    let mapped: String = text
        .chars()
        .filter(|c| !matches!(c, '\'' | '\u{2019}' | '\u{2018}'))
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Lexicon {
    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let (cat, phrase) = trimmed
                .split_once('\t')
                .ok_or(LexiconError::MissingTab { line })?;
            let category: CommunicationCategory =
                cat.parse().map_err(|_| LexiconError::UnknownCategory {
                    line,
                    category: cat.to_string(),
                })?;
            if category == CommunicationCategory::Neutral {
                return Err(LexiconError::NeutralPhrase { line });
            }
            let norm = normalize_text(phrase);
            if norm.is_empty() {
                return Err(LexiconError::EmptyPhrase { line });
            }
            entries.push(Entry {
                category,
                phrase: phrase.trim().to_string(),
                needle: format!(" {norm} "),
            });
        }
        Ok(Self { entries })
    }

    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(include_str!("../../assets/lexicon.tsv")).expect("bundled lexicon parses")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every entry whose phrase occurs in `text` on word boundaries.
    pub fn matches(&self, text: &str) -> Vec<LexiconMatch<'_>> {
        let hay = format!(" {} ", normalize_text(text));
        self.entries
            .iter()
            .filter(|e| hay.contains(&e.needle))
            .map(|e| LexiconMatch {
                category: e.category,
                phrase: &e.phrase,
            })
            .collect()
    }

    pub fn classify(&self, text: &str) -> ClassificationResult {
        let hits = self.matches(text);
        if hits.is_empty() {
            return ClassificationResult::neutral("no lexicon match");
        }
        let rationale = hits
            .iter()
            .map(|m| format!("'{}' ({})", m.phrase, m.category))
            .collect::<Vec<_>>()
            .join(", ");
        ClassificationResult::new(hits.iter().map(|m| m.category), format!("matched {rationale}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CommunicationCategory::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("It's NOT a big-deal!"), "its not a big deal");
        assert_eq!(normalize_text("  don\u{2019}t   "), "dont");
    }

    #[test]
    fn word_boundaries() {
        let lx = Lexicon::parse("pressure\tjust\n").unwrap();
        assert_eq!(lx.matches("Just eat.").len(), 1);
        assert!(lx.matches("That's unjust").is_empty());
        assert!(lx.matches("adjusting").is_empty());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            Lexicon::parse("validation only").unwrap_err(),
            LexiconError::MissingTab { line: 1 }
        );
        assert!(matches!(
            Lexicon::parse("# c\n\nbogus\tx").unwrap_err(),
            LexiconError::UnknownCategory { line: 3, .. }
        ));
        assert_eq!(
            Lexicon::parse("neutral\thello").unwrap_err(),
            LexiconError::NeutralPhrase { line: 1 }
        );
        assert_eq!(
            Lexicon::parse("pressure\t!!").unwrap_err(),
            LexiconError::EmptyPhrase { line: 1 }
        );
    }

    // Expected sets below come from reading assets/lexicon.tsv by hand.
    #[test]
    fn bundled_lexicon_examples() {
        let lx = Lexicon::bundled();
        assert_eq!(
            lx.classify("That must be really hard \u{2014} your routine changed without warning.")
                .category_list(),
            vec![Validation]
        );
        assert_eq!(
            lx.classify("Just eat the Thai food, it's not a big deal.").category_list(),
            vec![Invalidation, Pressure]
        );
        assert!(lx.classify("Hi Alex, I'm home.").is_neutral());
        assert_eq!(
            lx.classify("Do you want me to take it outside?").category_list(),
            vec![OptionsGiving, SensoryAccommodation]
        );
    }
}
