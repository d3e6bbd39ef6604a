//! Algorithm-validation harness: rater agreement, algorithm-rater
//! correlation, and separation of low- and high-stress corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::descriptive::mean;
use super::icc::{icc_2_1, IccResult, RatingMatrix};
use super::parametric::{cohens_d, pearson_r, Correlation};
use super::table::{diag, read_table, RowReader};
use super::{PipelineError, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusLabel {
    LowStress,
    HighStress,
}

impl CorpusLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusLabel::LowStress => "low_stress",
            CorpusLabel::HighStress => "high_stress",
        }
    }
}

impl FromStr for CorpusLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low_stress" => Ok(CorpusLabel::LowStress),
            "high_stress" => Ok(CorpusLabel::HighStress),
            other => Err(format!("unknown corpus label '{other}' (expected low_stress or high_stress)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTurn {
    pub conversation_id: String,
    pub turn_index: u32,
    pub rater_scores: Vec<f64>,
    pub algorithm_score: f64,
    pub corpus_label: CorpusLabel,
}

impl AnnotatedTurn {
    pub fn csv_header(raters: usize) -> Vec<String> {
        let mut h = vec!["conversation_id".to_string(), "turn_index".to_string()];
        h.extend((1..=raters).map(|i| format!("rater_{i}")));
        h.push("algorithm_score".into());
        h.push("corpus_label".into());
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![self.conversation_id.clone(), self.turn_index.to_string()];
        r.extend(self.rater_scores.iter().map(|v| v.to_string()));
        r.push(self.algorithm_score.to_string());
        r.push(self.corpus_label.as_str().to_string());
        r
    }
}

/// Reads `conversation_id,turn_index,rater_1..rater_k,algorithm_score,corpus_label`.
pub fn parse_annotations(source: impl Read) -> Result<Vec<AnnotatedTurn>, PipelineError> {
    let table = read_table(source)?;
    let h = &table.header;
    let raters = h.len().saturating_sub(4);
    if h.len() < 5 || AnnotatedTurn::csv_header(raters) != *h {
        return Err(PipelineError::Schema(vec![diag(
            1,
            None,
            format!(
                "expected header conversation_id,turn_index,rater_1..rater_k,algorithm_score,corpus_label; found '{}'",
                h.join(",")
            ),
        )]));
    }
    let mut diags = Vec::new();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, rec) in &table.rows {
        let mut r = RowReader {
            line: *line,
            record: rec,
            header: h,
            diags: &mut diags,
        };
        let conv = r.text("conversation_id");
        let turn = r.integer("turn_index", 0, u32::MAX);
        let scores: Vec<Option<f64>> = (1..=raters)
            .map(|i| r.number(&format!("rater_{i}"), f64::MIN, f64::MAX))
            .collect();
        let algo = r.number("algorithm_score", f64::MIN, f64::MAX);
        let label = r.text("corpus_label").and_then(|l| match l.parse::<CorpusLabel>() {
            Ok(v) => Some(v),
            Err(e) => {
                r.fail(Some("corpus_label"), e);
                None
            }
        });
        if let (Some(c), Some(t)) = (&conv, turn) {
            if !seen.insert((c.clone(), t)) {
                r.fail(None, format!("duplicate turn {t} for conversation '{c}'"));
            }
        }
        if let (Some(conversation_id), Some(turn_index), Some(algorithm_score), Some(corpus_label)) =
            (conv, turn, algo, label)
        {
            if scores.iter().all(Option::is_some) {
                out.push(AnnotatedTurn {
                    conversation_id,
                    turn_index,
                    rater_scores: scores.into_iter().flatten().collect(),
                    algorithm_score,
                    corpus_label,
                });
            }
        }
    }
    if !diags.is_empty() {
        return Err(PipelineError::Schema(diags));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub conversations: usize,
    pub final_scores: Vec<f64>,
    pub mean_final_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub turns: usize,
    pub conversations: usize,
    pub raters: usize,
    pub icc: IccResult,
    /// Mean rater score against algorithm score, per turn.
    pub algorithm_vs_raters: Correlation,
    /// High-stress minus low-stress, over per-conversation final algorithm scores.
    pub cohens_d: f64,
    pub low_stress: CorpusSummary,
    pub high_stress: CorpusSummary,
}

impl ValidationReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Stress estimator validation");
        let _ = writeln!(
            s,
            "  turns {}  conversations {}  raters {}",
            self.turns, self.conversations, self.raters
        );
        let _ = writeln!(s, "{:<34}{:>12}", "statistic", "value");
        let _ = writeln!(
            s,
            "{:<34}{:>12.4}  {:.0}% CI [{:.4}, {:.4}]",
            "ICC(2,1) absolute agreement",
            self.icc.icc,
            self.icc.confidence * 100.0,
            self.icc.ci_low,
            self.icc.ci_high
        );
        let _ = writeln!(
            s,
            "{:<34}{:>12.4}  p = {:.3e}  n = {}",
            "Pearson r (algorithm vs raters)", self.algorithm_vs_raters.r, self.algorithm_vs_raters.p_value,
            self.algorithm_vs_raters.n
        );
        let _ = writeln!(s, "{:<34}{:>12.4}", "Cohen's d (high - low, final)", self.cohens_d);
        let _ = writeln!(
            s,
            "{:<34}{:>12.2}  ({} conversations)",
            "mean final score, low_stress", self.low_stress.mean_final_score, self.low_stress.conversations
        );
        let _ = writeln!(
            s,
            "{:<34}{:>12.2}  ({} conversations)",
            "mean final score, high_stress", self.high_stress.mean_final_score, self.high_stress.conversations
        );
        s
    }
}

/// Computes the validation report over annotated turns.
pub fn run_validation(turns: &[AnnotatedTurn], confidence: f64) -> Result<ValidationReport, StatsError> {
    let raters = turns.first().map(|t| t.rater_scores.len()).unwrap_or(0);
    if raters < 2 {
        return Err(StatsError::Contract(format!("validation needs at least 2 raters, found {raters}")));
    }
    if turns.iter().any(|t| t.rater_scores.len() != raters) {
        return Err(StatsError::Contract("turns have differing rater counts".into()));
    }

    let mut by_conv: BTreeMap<&str, (CorpusLabel, Vec<&AnnotatedTurn>)> = BTreeMap::new();
    for t in turns {
        let entry = by_conv
            .entry(t.conversation_id.as_str())
            .or_insert_with(|| (t.corpus_label, Vec::new()));
        if entry.0 != t.corpus_label {
            return Err(StatsError::Contract(format!(
                "conversation '{}' has more than one corpus label",
                t.conversation_id
            )));
        }
        entry.1.push(t);
    }
    let finals = |label: CorpusLabel| -> Vec<f64> {
        by_conv
            .values()
            .filter(|(l, _)| *l == label)
            .map(|(_, ts)| {
                ts.iter()
                    .max_by_key(|t| t.turn_index)
                    .expect("nonempty conversation")
                    .algorithm_score
            })
            .collect()
    };
    let low = finals(CorpusLabel::LowStress);
    let high = finals(CorpusLabel::HighStress);
    if low.len() < 2 || high.len() < 2 {
        return Err(StatsError::Contract(format!(
            "need at least 2 conversations per corpus label (low_stress {}, high_stress {})",
            low.len(),
            high.len()
        )));
    }

    let matrix = RatingMatrix::new(turns.iter().map(|t| t.rater_scores.clone()).collect())?;
    let icc = icc_2_1(&matrix, confidence)?;
    let rater_means: Vec<f64> = turns.iter().map(|t| mean(&t.rater_scores)).collect();
    let algo: Vec<f64> = turns.iter().map(|t| t.algorithm_score).collect();
    let correlation = pearson_r(&algo, &rater_means)?;
    let d = cohens_d(&high, &low)?;

    Ok(ValidationReport {
        turns: turns.len(),
        conversations: by_conv.len(),
        raters,
        icc,
        algorithm_vs_raters: correlation,
        cohens_d: d,
        low_stress: CorpusSummary {
            conversations: low.len(),
            mean_final_score: mean(&low),
            final_scores: low,
        },
        high_stress: CorpusSummary {
            conversations: high.len(),
            mean_final_score: mean(&high),
            final_scores: high,
        },
    })
}
