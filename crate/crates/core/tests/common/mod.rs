#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use fairlens_core::eventlog::{Case, Event, EventLog, Provenance, RawAttributes};
use fairlens_core::triage_sim::Scenario;

pub fn base() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2150, 3, 1)
        .unwrap()
        .and_hms_opt(8, 0, 0)
        .unwrap()
}

/// `(activity, seconds after base, acuity)` rows for one case.
pub fn case_of(id: &str, rows: &[(&str, i64, Option<u8>)]) -> Case {
    let events = rows
        .iter()
        .map(|&(activity, at, acuity)| Event {
            case_id: id.into(),
            activity: activity.into(),
            timestamp: base() + Duration::seconds(at),
            attributes: RawAttributes {
                acuity,
                ..RawAttributes::default()
            },
            extra: BTreeMap::new(),
        })
        .collect();
    Case::new(id.into(), events).unwrap()
}

pub fn log_of(cases: Vec<Case>) -> EventLog {
    let rows = cases.iter().map(|c| c.events.len()).sum();
    EventLog::new(
        cases,
        Provenance {
            source: "fixture".into(),
            rows_read: rows,
            rows_rejected: 0,
        },
    )
    .unwrap()
}

/// One case per trace, events one minute apart.
pub fn log_from_traces(traces: &[&[&str]]) -> EventLog {
    let cases = traces
        .iter()
        .enumerate()
        .map(|(i, trace)| {
            let rows: Vec<(&str, i64, Option<u8>)> = trace
                .iter()
                .enumerate()
                .map(|(j, a)| (*a, 60 * j as i64, None))
                .collect();
            case_of(&i.to_string(), &rows)
        })
        .collect();
    log_of(cases)
}

/// Presentation model that always yields acuity 3 (two or more resources,
/// nothing urgent, vitals pinned inside the safe range).
pub const ACUITY3_PRESENTATION: &str = r#"{"life_saving_prob": 0, "high_risk_prob": 0,
    "confused_prob": 0, "severe_pain_prob": 0, "resource_weights": [0, 0, 1],
    "heart_rate": {"mean": 80, "sd": 0, "min": 30, "max": 200},
    "respiratory_rate": {"mean": 16, "sd": 0, "min": 6, "max": 50},
    "spo2": {"mean": 98, "sd": 0, "min": 60, "max": 100}}"#;

pub fn acuity3_scenario(n_cases: usize, extra: &str) -> Scenario {
    let text =
        format!(r#"{{"n_cases": {n_cases}, "presentation": {ACUITY3_PRESENTATION}{extra}}}"#);
    Scenario::from_json(&text).unwrap()
}
