use crate::ingest::{Gender, QuestionnaireResult, RecordMeta, RhythmogramRecord, RrSample};

pub fn record_from_rr(session: &str, person: &str, rr: &[f64], level: u8) -> RhythmogramRecord {
    let mut t = 0;
    let series = rr
        .iter()
        .map(|&r| {
            t += r.round() as i64;
            RrSample { time_ms: t, rr_ms: r }
        })
        .collect();
    RhythmogramRecord::new(
        series,
        RecordMeta {
            start_time: chrono::NaiveDate::from_ymd_opt(2021, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
            session_id: session.into(),
            person_id: person.into(),
            age: 30,
            gender: Gender::Unspecified,
        },
        QuestionnaireResult {
            ms_begin: 0,
            ms_end: t.max(1),
            need_scores: [level; 4],
            mean_score: level as f64,
            level,
        },
    )
    .unwrap()
}

pub fn record_with(session: &str, person: &str, level: u8) -> RhythmogramRecord {
    record_from_rr(session, person, &[800.0, 810.0, 790.0], level)
}
