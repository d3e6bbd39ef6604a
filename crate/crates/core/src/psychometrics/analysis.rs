//! Study analysis over per-participant records.

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::descriptive::{mean, median, sample_variance};
use super::nonparametric::{mann_whitney_u, wilcoxon_signed_rank, MannWhitneyResult, WilcoxonResult};
use super::parametric::cronbach_alpha;
use super::table::{expect_header, read_table, RowReader};
use super::{PipelineError, StatsError};
use crate::domain::Condition;

pub const STUDY_HEADER: [&str; 13] = [
    "participant_id",
    "condition",
    "pre_deficit_1",
    "pre_deficit_2",
    "post_deficit_1",
    "post_deficit_2",
    "pre_flexibility",
    "post_flexibility",
    "turns_to_end",
    "final_stress",
    "rating_stress_bar",
    "rating_interpreter",
    "rating_coach",
];

/// One participant. Deficit items are stored as scale-keyed scores of two
/// reverse-keyed items; agreement is `8 - score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub participant_id: String,
    pub condition: Condition,
    pub pre_deficit: [f64; 2],
    pub post_deficit: [f64; 2],
    pub pre_flexibility: f64,
    pub post_flexibility: f64,
    pub turns_to_end: u32,
    pub final_stress: f64,
    pub rating_stress_bar: Option<f64>,
    pub rating_interpreter: Option<f64>,
    pub rating_coach: Option<f64>,
}

fn reverse(item: f64) -> f64 {
    8.0 - item
}

impl StudyRecord {
    /// Deficit-framing composite on the agreement scale (higher = stronger
    /// deficit attribution).
    pub fn pre_deficit_composite(&self) -> f64 {
        (reverse(self.pre_deficit[0]) + reverse(self.pre_deficit[1])) / 2.0
    }

    pub fn post_deficit_composite(&self) -> f64 {
        (reverse(self.post_deficit[0]) + reverse(self.post_deficit[1])) / 2.0
    }

    pub fn deficit_change(&self) -> f64 {
        self.post_deficit_composite() - self.pre_deficit_composite()
    }

    fn opt(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.participant_id.clone(),
            self.condition.as_str().to_string(),
            self.pre_deficit[0].to_string(),
            self.pre_deficit[1].to_string(),
            self.post_deficit[0].to_string(),
            self.post_deficit[1].to_string(),
            self.pre_flexibility.to_string(),
            self.post_flexibility.to_string(),
            self.turns_to_end.to_string(),
            self.final_stress.to_string(),
            Self::opt(self.rating_stress_bar),
            Self::opt(self.rating_interpreter),
            Self::opt(self.rating_coach),
        ]
    }
}

pub fn parse_study_records(source: impl Read) -> Result<Vec<StudyRecord>, PipelineError> {
    let table = read_table(source)?;
    expect_header(&table.header, &STUDY_HEADER)?;
    let mut diags = Vec::new();
    let mut out = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for (line, rec) in &table.rows {
        let mut r = RowReader {
            line: *line,
            record: rec,
            header: &table.header,
            diags: &mut diags,
        };
        let id = r.text("participant_id");
        if let Some(id) = &id {
            if !ids.insert(id.clone()) {
                r.fail(Some("participant_id"), format!("duplicate participant '{id}'"));
            }
        }
        let condition = r.text("condition").and_then(|c| match c.parse::<Condition>() {
            Ok(c) => Some(c),
            Err(e) => {
                r.fail(Some("condition"), e.to_string());
                None
            }
        });
        let item = |r: &mut RowReader<'_>, c: &str| r.number(c, 1.0, 7.0);
        let pre1 = item(&mut r, "pre_deficit_1");
        let pre2 = item(&mut r, "pre_deficit_2");
        let post1 = item(&mut r, "post_deficit_1");
        let post2 = item(&mut r, "post_deficit_2");
        let pre_flex = item(&mut r, "pre_flexibility");
        let post_flex = item(&mut r, "post_flexibility");
        let turns = r.integer("turns_to_end", 0, u32::MAX);
        let final_stress = r.number("final_stress", 0.0, 100.0);
        let ratings: Vec<Option<Option<f64>>> = ["rating_stress_bar", "rating_interpreter", "rating_coach"]
            .iter()
            .map(|c| r.optional_number(c, 1.0, 7.0))
            .collect();
        if condition == Some(Condition::Baseline) && ratings.iter().any(|x| matches!(x, Some(Some(_)))) {
            r.fail(None, "feature ratings must be blank for baseline participants");
        }
        if let (Some(participant_id), Some(condition), Some(a), Some(b), Some(c), Some(d), Some(e), Some(f), Some(t), Some(s)) =
            (id, condition, pre1, pre2, post1, post2, pre_flex, post_flex, turns, final_stress)
        {
            if let [Some(sb), Some(ip), Some(co)] = ratings[..] {
                out.push(StudyRecord {
                    participant_id,
                    condition,
                    pre_deficit: [a, b],
                    post_deficit: [c, d],
                    pre_flexibility: e,
                    post_flexibility: f,
                    turns_to_end: t,
                    final_stress: s,
                    rating_stress_bar: sb,
                    rating_interpreter: ip,
                    rating_coach: co,
                });
            }
        }
    }
    if !diags.is_empty() {
        return Err(PipelineError::Schema(diags));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Ratings at or above this value count as helpful.
    pub helpful_cutoff: Option<f64>,
}

/// A within-group test that may be undefined (all differences zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WithinGroup {
    Tested(WilcoxonResult),
    Undefined { reason: String },
}

impl WithinGroup {
    fn run(pre: &[f64], post: &[f64]) -> Result<Self, StatsError> {
        match wilcoxon_signed_rank(pre, post) {
            Ok(w) => Ok(WithinGroup::Tested(w)),
            Err(StatsError::Degenerate(reason)) => Ok(WithinGroup::Undefined { reason }),
            Err(e) => Err(e),
        }
    }

    pub fn result(&self) -> Option<&WilcoxonResult> {
        match self {
            WithinGroup::Tested(w) => Some(w),
            WithinGroup::Undefined { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeScores {
    pub mean_change_neurowise: f64,
    pub mean_change_baseline: f64,
    /// Change scores, NeuroWise as the first sample.
    pub between: MannWhitneyResult,
    pub within_neurowise: WithinGroup,
    pub within_baseline: WithinGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub median_neurowise: f64,
    pub median_baseline: f64,
    pub mean_neurowise: f64,
    pub mean_baseline: f64,
    pub test: MannWhitneyResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRating {
    pub feature: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpful_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub n_neurowise: usize,
    pub n_baseline: usize,
    pub deficit_framing: ChangeScores,
    /// Alpha of the two pre-test deficit items (agreement scale); absent if undefined.
    pub deficit_alpha: Option<f64>,
    pub flexibility: ChangeScores,
    pub turns_to_end: GroupComparison,
    pub final_stress: GroupComparison,
    pub feature_ratings: Vec<FeatureRating>,
}

fn split(records: &[StudyRecord], c: Condition) -> Vec<&StudyRecord> {
    records.iter().filter(|r| r.condition == c).collect()
}

fn change_scores(
    nw: &[&StudyRecord],
    bl: &[&StudyRecord],
    pre: impl Fn(&StudyRecord) -> f64,
    post: impl Fn(&StudyRecord) -> f64,
) -> Result<ChangeScores, StatsError> {
    let col = |g: &[&StudyRecord], f: &dyn Fn(&StudyRecord) -> f64| g.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let (nw_pre, nw_post) = (col(nw, &pre), col(nw, &post));
    let (bl_pre, bl_post) = (col(bl, &pre), col(bl, &post));
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y - x).collect::<Vec<f64>>();
    let (nw_ch, bl_ch) = (diff(&nw_pre, &nw_post), diff(&bl_pre, &bl_post));
    Ok(ChangeScores {
        mean_change_neurowise: mean(&nw_ch),
        mean_change_baseline: mean(&bl_ch),
        between: mann_whitney_u(&nw_ch, &bl_ch)?,
        within_neurowise: WithinGroup::run(&nw_pre, &nw_post)?,
        within_baseline: WithinGroup::run(&bl_pre, &bl_post)?,
    })
}

fn compare(nw: &[f64], bl: &[f64]) -> Result<GroupComparison, StatsError> {
    Ok(GroupComparison {
        median_neurowise: median(nw),
        median_baseline: median(bl),
        mean_neurowise: mean(nw),
        mean_baseline: mean(bl),
        test: mann_whitney_u(nw, bl)?,
    })
}

pub fn run_analysis(records: &[StudyRecord], options: &AnalysisOptions) -> Result<StudyReport, StatsError> {
    let nw = split(records, Condition::NeuroWise);
    let bl = split(records, Condition::Baseline);
    if nw.len() < 2 || bl.len() < 2 {
        return Err(StatsError::Degenerate(format!(
            "need at least 2 records per condition (neurowise {}, baseline {})",
            nw.len(),
            bl.len()
        )));
    }
    let deficit = change_scores(&nw, &bl, StudyRecord::pre_deficit_composite, StudyRecord::post_deficit_composite)?;
    let flexibility = change_scores(&nw, &bl, |r| r.pre_flexibility, |r| r.post_flexibility)?;
    let items: Vec<Vec<f64>> = records
        .iter()
        .map(|r| vec![reverse(r.pre_deficit[0]), reverse(r.pre_deficit[1])])
        .collect();
    let deficit_alpha = match cronbach_alpha(&items) {
        Ok(a) => Some(a),
        Err(StatsError::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let turns = |g: &[&StudyRecord]| g.iter().map(|r| f64::from(r.turns_to_end)).collect::<Vec<_>>();
    let stress = |g: &[&StudyRecord]| g.iter().map(|r| r.final_stress).collect::<Vec<_>>();

    type Getter = fn(&StudyRecord) -> Option<f64>;
    let features: [(&str, Getter); 3] = [
        ("stress_bar", |r| r.rating_stress_bar),
        ("interpreter", |r| r.rating_interpreter),
        ("coach", |r| r.rating_coach),
    ];
    let feature_ratings = features
        .iter()
        .filter_map(|(name, get)| {
            let v: Vec<f64> = nw.iter().filter_map(|r| get(r)).collect();
            if v.is_empty() {
                return None;
            }
            Some(FeatureRating {
                feature: name.to_string(),
                n: v.len(),
                mean: mean(&v),
                sd: sample_variance(&v).sqrt(),
                helpful_pct: options
                    .helpful_cutoff
                    .map(|c| 100.0 * v.iter().filter(|x| **x >= c).count() as f64 / v.len() as f64),
            })
        })
        .collect();

    Ok(StudyReport {
        n_neurowise: nw.len(),
        n_baseline: bl.len(),
        deficit_framing: deficit,
        deficit_alpha,
        flexibility,
        turns_to_end: compare(&turns(&nw), &turns(&bl))?,
        final_stress: compare(&stress(&nw), &stress(&bl))?,
        feature_ratings,
    })
}

fn within_line(s: &mut String, label: &str, w: &WithinGroup) {
    match w {
        WithinGroup::Tested(w) => {
            let _ = writeln!(
                s,
                "    {label:<22} W = {:>6.1}  p = {:.3}  r_rb = {:+.2}  ({})",
                w.test.statistic, w.test.p_value, w.test.effect_size, w.test.method
            );
        }
        WithinGroup::Undefined { reason } => {
            let _ = writeln!(s, "    {label:<22} undefined: {reason}");
        }
    }
}

fn between_line(s: &mut String, m: &MannWhitneyResult) {
    let _ = writeln!(
        s,
        "    between conditions     U = {:>6.1} (min U = {:.1})  p = {:.3}  delta = {:+.2} ({})  ({})",
        m.u_x,
        m.u_min,
        m.test.p_value,
        m.test.effect_size,
        m.test.effect_label.as_str(),
        m.test.method
    );
}

impl StudyReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Study analysis (neurowise n = {}, baseline n = {})", self.n_neurowise, self.n_baseline);
        let _ = writeln!(s);
        let _ = writeln!(s, "Deficit framing (2-item composite, agreement scale)");
        match self.deficit_alpha {
            Some(a) => {
                let _ = writeln!(s, "    Cronbach's alpha (pre) {a:.2}");
            }
            None => {
                let _ = writeln!(s, "    Cronbach's alpha (pre) undefined");
            }
        }
        for (title, c) in [("deficit", &self.deficit_framing), ("flexibility", &self.flexibility)] {
            if title == "flexibility" {
                let _ = writeln!(s);
                let _ = writeln!(s, "Communication flexibility");
            }
            let _ = writeln!(
                s,
                "    mean change            neurowise {:+.2}  baseline {:+.2}",
                c.mean_change_neurowise, c.mean_change_baseline
            );
            between_line(&mut s, &c.between);
            within_line(&mut s, "within neurowise", &c.within_neurowise);
            within_line(&mut s, "within baseline", &c.within_baseline);
        }
        for (title, g) in [("Turns to end", &self.turns_to_end), ("Final stress", &self.final_stress)] {
            let _ = writeln!(s);
            let _ = writeln!(s, "{title}");
            let _ = writeln!(
                s,
                "    median                 neurowise {:.1}  baseline {:.1}",
                g.median_neurowise, g.median_baseline
            );
            between_line(&mut s, &g.test);
        }
        if !self.feature_ratings.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "Feature ratings (neurowise, 1-7)");
            for f in &self.feature_ratings {
                let helpful = f.helpful_pct.map(|p| format!("  helpful {p:.0}%")).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "    {:<22} mean {:.2}  sd {:.2}  n {}{helpful}",
                    f.feature, f.mean, f.sd, f.n
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, c: Condition, pre: f64, post: f64, turns: u32) -> StudyRecord {
        StudyRecord {
            participant_id: id.into(),
            condition: c,
            pre_deficit: [pre, pre],
            post_deficit: [post, post + 1.0],
            pre_flexibility: 4.0,
            post_flexibility: 4.0,
            turns_to_end: turns,
            final_stress: 30.0,
            rating_stress_bar: None,
            rating_interpreter: None,
            rating_coach: None,
        }
    }

    #[test]
    fn identical_conditions_have_zero_delta() {
        let mut v = Vec::new();
        for (i, c) in [Condition::NeuroWise, Condition::Baseline].into_iter().enumerate() {
            v.push(rec(&format!("a{i}"), c, 3.0, 4.0, 8));
            v.push(rec(&format!("b{i}"), c, 2.0, 5.0, 9));
            v.push(rec(&format!("c{i}"), c, 5.0, 4.0, 10));
        }
        let r = run_analysis(&v, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.deficit_framing.between.test.effect_size, 0.0);
        assert_eq!(r.deficit_framing.between.test.effect_label, super::super::EffectLabel::Small);
        assert!(r.flexibility.within_neurowise.result().is_none());
    }

    #[test]
    fn medians_of_turns() {
        let mut v = Vec::new();
        for i in 0..3 {
            v.push(rec(&format!("n{i}"), Condition::NeuroWise, 3.0, 4.0, 8));
            v.push(rec(&format!("b{i}"), Condition::Baseline, 3.0, 4.0, 11));
        }
        let r = run_analysis(&v, &AnalysisOptions::default()).unwrap();
        assert_eq!((r.turns_to_end.median_neurowise, r.turns_to_end.median_baseline), (8.0, 11.0));
    }

    #[test]
    fn too_few_records() {
        let v = vec![
            rec("a", Condition::NeuroWise, 3.0, 4.0, 8),
            rec("b", Condition::Baseline, 3.0, 4.0, 8),
            rec("c", Condition::Baseline, 3.0, 4.0, 8),
        ];
        assert!(matches!(
            run_analysis(&v, &AnalysisOptions::default()),
            Err(StatsError::Degenerate(_))
        ));
    }

    #[test]
    fn reverse_scoring() {
        let r = rec("a", Condition::NeuroWise, 3.0, 4.0, 8);
        assert_eq!(r.pre_deficit_composite(), 5.0);
        assert_eq!(r.post_deficit_composite(), 3.5);
        assert_eq!(r.deficit_change(), -1.5);
    }

    #[test]
    fn baseline_ratings_rejected() {
        let src = format!("{}\nP1,baseline,4,4,4,4,4,4,8,30,5,,\n", STUDY_HEADER.join(","));
        assert!(matches!(parse_study_records(src.as_bytes()), Err(PipelineError::Schema(_))));
    }
}
