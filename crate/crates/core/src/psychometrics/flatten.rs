//! Joins session exports with survey responses into study records.

use std::collections::BTreeMap;
use std::io::Read;

use super::analysis::StudyRecord;
use super::table::{expect_header, read_table, RowReader};
use super::PipelineError;
use crate::orchestrator::TurnRecord;

pub const SURVEY_HEADER: [&str; 11] = [
    "participant_id",
    "session_id",
    "pre_deficit_1",
    "pre_deficit_2",
    "post_deficit_1",
    "post_deficit_2",
    "pre_flexibility",
    "post_flexibility",
    "rating_stress_bar",
    "rating_interpreter",
    "rating_coach",
];

/// Builds one study record per survey row. Condition, turns-to-end and final
/// stress come from the session's export lines.
pub fn flatten_exports(survey: impl Read, turns: &[TurnRecord]) -> Result<Vec<StudyRecord>, PipelineError> {
    let mut sessions: BTreeMap<&str, Vec<&TurnRecord>> = BTreeMap::new();
    for t in turns {
        sessions.entry(t.session_id.as_str()).or_default().push(t);
    }
    let table = read_table(survey)?;
    expect_header(&table.header, &SURVEY_HEADER)?;
    let mut diags = Vec::new();
    let mut out = Vec::new();
    for (line, rec) in &table.rows {
        let mut r = RowReader {
            line: *line,
            record: rec,
            header: &table.header,
            diags: &mut diags,
        };
        let pid = r.text("participant_id");
        let sid = r.text("session_id");
        let items: Vec<Option<f64>> = SURVEY_HEADER[2..8].iter().map(|c| r.number(c, 1.0, 7.0)).collect();
        let ratings: Vec<Option<Option<f64>>> = SURVEY_HEADER[8..]
            .iter()
            .map(|c| r.optional_number(c, 1.0, 7.0))
            .collect();
        let Some(sid) = sid else { continue };
        let Some(session) = sessions.get(sid.as_str()) else {
            r.fail(Some("session_id"), format!("no export lines for session '{sid}'"));
            continue;
        };
        let last = session
            .iter()
            .max_by_key(|t| t.turn_index)
            .expect("grouped sessions are nonempty");
        let condition = last.condition;
        let shown = |x: Option<f64>| if condition.shows_support() { x } else { None };
        if let (Some(pid), Some(items), Some(ratings)) = (
            pid,
            items.into_iter().collect::<Option<Vec<f64>>>(),
            ratings.into_iter().collect::<Option<Vec<Option<f64>>>>(),
        ) {
            out.push(StudyRecord {
                participant_id: pid,
                condition,
                pre_deficit: [items[0], items[1]],
                post_deficit: [items[2], items[3]],
                pre_flexibility: items[4],
                post_flexibility: items[5],
                turns_to_end: u32::try_from(session.len()).unwrap_or(u32::MAX),
                final_stress: f64::from(last.stress_after),
                rating_stress_bar: shown(ratings[0]),
                rating_interpreter: shown(ratings[1]),
                rating_coach: shown(ratings[2]),
            });
        }
    }
    if !diags.is_empty() {
        return Err(PipelineError::Schema(diags));
    }
    Ok(out)
}

/// Writes records in the study CSV layout.
pub fn write_study_csv(records: &[StudyRecord], sink: impl std::io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(super::analysis::STUDY_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}
