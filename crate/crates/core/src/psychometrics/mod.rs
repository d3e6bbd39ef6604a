//! Statistics kernel plus the validation and study-analysis pipelines.

mod analysis;
mod descriptive;
mod flatten;
mod icc;
mod nonparametric;
mod parametric;
mod table;
mod validation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{
    parse_study_records, run_analysis, AnalysisOptions, ChangeScores, FeatureRating, GroupComparison,
    StudyRecord, StudyReport, WithinGroup, STUDY_HEADER,
};
pub use descriptive::{mean, median, midranks, sample_variance, tie_group_sizes};
pub use flatten::{flatten_exports, write_study_csv, SURVEY_HEADER};
pub use icc::{icc_2_1, IccResult, RatingMatrix};
pub use nonparametric::{
    cliffs_delta, cliffs_delta_from_u, exact_u_distribution, exact_signed_rank_distribution, mann_whitney_u,
    wilcoxon_signed_rank, MannWhitneyResult, WilcoxonResult, EXACT_SIGNED_RANK_MAX, EXACT_U_MAX_POOLED,
};
pub use parametric::{cohens_d, cronbach_alpha, pearson_r, Correlation};
pub use table::CsvDiagnostic;
pub use validation::{
    parse_annotations, run_validation, AnnotatedTurn, CorpusLabel, CorpusSummary, ValidationReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// Magnitude band for Cliff's delta (and other delta-scaled effects).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectLabel {
    Small,
    Medium,
    Large,
}

impl EffectLabel {
    pub const MEDIUM_FROM: f64 = 0.33;
    pub const LARGE_FROM: f64 = 0.474;

    pub fn from_delta(delta: f64) -> Self {
        let a = delta.abs();
        if a < Self::MEDIUM_FROM {
            EffectLabel::Small
        } else if a < Self::LARGE_FROM {
            EffectLabel::Medium
        } else {
            EffectLabel::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EffectLabel::Small => "small",
            EffectLabel::Medium => "medium",
            EffectLabel::Large => "large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub effect_size: f64,
    pub effect_label: EffectLabel,
    pub method: String,
}

impl TestResult {
    pub fn new(statistic: f64, p_value: f64, effect_size: f64, method: impl Into<String>) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            effect_size,
            effect_label: EffectLabel::from_delta(effect_size),
            method: method.into(),
        }
    }
}

/// Errors from the file-driven pipelines.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema errors:\n{}", format_diagnostics(.0))]
    Schema(Vec<CsvDiagnostic>),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn format_diagnostics(d: &[CsvDiagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}
