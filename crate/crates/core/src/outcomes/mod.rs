//! Per-case process outcomes: time, re-do, deviation and decision.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformance::{replay_case, ReplayResult};
use crate::discovery::ProcessNet;
use crate::error::{Error, Result};
use crate::eventlog::demographics::canonical_key;
use crate::eventlog::{
    activity, AgeGroup, Case, DemographicProfile, EventLog, Gender, InsuranceGroup, LanguageGroup,
    RaceGroup,
};

pub const DEFAULT_GAP_THRESHOLD_MINUTES: i64 = 30;

/// Seconds from the first to the last event.
pub fn case_duration(case: &Case) -> i64 {
    match (case.events.first(), case.events.last()) {
        (Some(first), Some(last)) => (last.timestamp - first.timestamp).num_seconds(),
        _ => 0,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RedoBreakdown {
    pub total_redos: u32,
    pub clinical_redos: u32,
    pub waste_redos: u32,
    /// `waste_redos / events in case`.
    pub waste_pct: f64,
}

/// Counts repeated activities and splits them into clinical and waste re-dos.
///
/// Repeated arrival or discharge is waste. Repeated vitals and medication
/// events are clinical, as are repeats of activities outside the ED
/// vocabulary. A repeated triage is clinical only when its acuity differs from
/// the previous triage's and more than `gap_minutes` have passed; a triage
/// without a recorded acuity never counts as a change.
pub fn classify_redos(case: &Case, gap_minutes: i64) -> RedoBreakdown {
    let mut seen: HashMap<&str, u32> = HashMap::new();
    let mut last_triage: Option<&crate::eventlog::Event> = None;
    let (mut clinical, mut waste) = (0u32, 0u32);
    for e in &case.events {
        let name = &*e.activity;
        let count = seen.entry(name).or_insert(0);
        *count += 1;
        let repeated = *count > 1;
        if name == activity::TRIAGE {
            if let (true, Some(prev)) = (repeated, last_triage) {
                let changed = matches!(
                    (prev.attributes.acuity, e.attributes.acuity),
                    (Some(a), Some(b)) if a != b
                );
                let gap = (e.timestamp - prev.timestamp).num_seconds();
                if changed && gap > gap_minutes * 60 {
                    clinical += 1;
                } else {
                    waste += 1;
                }
            }
            last_triage = Some(e);
            continue;
        }
        if !repeated {
            continue;
        }
        if name == activity::ENTER || name == activity::DISCHARGE {
            waste += 1;
        } else {
            clinical += 1;
        }
    }
    let events = case.events.len().max(1) as f64;
    RedoBreakdown {
        total_redos: clinical + waste,
        clinical_redos: clinical,
        waste_redos: waste,
        waste_pct: f64::from(waste) / events,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecisionGroup {
    Home,
    Facility,
    Death,
    AgainstAdvice,
    Unknown,
}

impl DecisionGroup {
    pub const ALL: [DecisionGroup; 5] = [
        DecisionGroup::Home,
        DecisionGroup::Facility,
        DecisionGroup::Death,
        DecisionGroup::AgainstAdvice,
        DecisionGroup::Unknown,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DecisionGroup::Home => "HOME",
            DecisionGroup::Facility => "FACILITY",
            DecisionGroup::Death => "DEATH",
            DecisionGroup::AgainstAdvice => "AGAINST_ADVICE",
            DecisionGroup::Unknown => "UNKNOWN",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.label() == s)
    }
}

impl fmt::Display for DecisionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const DISPOSITION_TABLE: [(&str, DecisionGroup); 14] = [
    ("UNKNOWN", DecisionGroup::Unknown),
    ("HOME", DecisionGroup::Home),
    ("HOME HEALTH CARE", DecisionGroup::Home),
    ("SKILLED NURSING FACILITY", DecisionGroup::Facility),
    ("REHAB", DecisionGroup::Facility),
    ("DIED", DecisionGroup::Death),
    ("CHRONIC/LONG TERM ACUTE CARE", DecisionGroup::Facility),
    ("HOSPICE", DecisionGroup::Death),
    ("AGAINST ADVICE", DecisionGroup::AgainstAdvice),
    ("PSYCH FACILITY", DecisionGroup::Facility),
    ("OTHER FACILITY", DecisionGroup::Facility),
    ("ACUTE HOSPITAL", DecisionGroup::Facility),
    ("ASSISTED LIVING", DecisionGroup::Facility),
    ("HEALTHCARE FACILITY", DecisionGroup::Facility),
];

/// Table lookup; `None` for dispositions not in [`DISPOSITION_TABLE`].
pub fn disposition_lookup(raw: &str) -> Option<DecisionGroup> {
    static INDEX: OnceLock<HashMap<String, DecisionGroup>> = OnceLock::new();
    INDEX
        .get_or_init(|| {
            DISPOSITION_TABLE
                .iter()
                .map(|&(k, g)| (canonical_key(k), g))
                .collect()
        })
        .get(&canonical_key(raw))
        .copied()
}

/// Decision group of a raw disposition; unlisted strings fall back to `Unknown`.
pub fn decision_group(raw: &str) -> DecisionGroup {
    disposition_lookup(raw).unwrap_or(DecisionGroup::Unknown)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcomes {
    pub case_id: String,
    pub duration_seconds: i64,
    pub redo: RedoBreakdown,
    pub fitness: f64,
    pub decision_group: DecisionGroup,
    pub acuity: Option<u8>,
    pub profile: DemographicProfile,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeReport {
    /// Cases whose disposition was missing or not in the table.
    pub unlisted_dispositions: usize,
    /// Cases containing at least one activity the net does not know.
    pub cases_with_unknown_activities: usize,
}

/// Outcomes for one case. The case must carry a mapped profile.
pub fn case_outcomes(case: &Case, replay: &ReplayResult, gap_minutes: i64) -> Result<CaseOutcomes> {
    let profile = case.profile.clone().ok_or_else(|| {
        Error::Validation(format!("case {} has no demographic profile", case.case_id))
    })?;
    Ok(CaseOutcomes {
        case_id: case.case_id.to_string(),
        duration_seconds: case_duration(case),
        redo: classify_redos(case, gap_minutes),
        fitness: replay.fitness,
        decision_group: decision_group(&profile.disposition_raw),
        acuity: profile.acuity,
        profile,
    })
}

/// One record per case, in log order.
pub fn extract_outcomes(
    log: &EventLog,
    net: &ProcessNet,
    gap_minutes: i64,
) -> Result<(Vec<CaseOutcomes>, OutcomeReport)> {
    let per_case: Vec<(CaseOutcomes, bool, bool)> = log
        .cases
        .par_iter()
        .map(|case| {
            let replay = replay_case(net, case)?;
            let out = case_outcomes(case, &replay, gap_minutes)?;
            let unlisted = disposition_lookup(&out.profile.disposition_raw).is_none();
            Ok((out, unlisted, replay.unknown_activities > 0))
        })
        .collect::<Result<_>>()?;
    let mut report = OutcomeReport::default();
    let outcomes = per_case
        .into_iter()
        .map(|(o, unlisted, unknown)| {
            report.unlisted_dispositions += usize::from(unlisted);
            report.cases_with_unknown_activities += usize::from(unknown);
            o
        })
        .collect();
    Ok((outcomes, report))
}

/// Flat CSV row for [`CaseOutcomes`].
#[derive(Debug, Serialize, Deserialize)]
struct OutcomeRow {
    case_id: String,
    duration_seconds: i64,
    total_redos: u32,
    clinical_redos: u32,
    waste_redos: u32,
    waste_pct: f64,
    fitness: f64,
    decision_group: DecisionGroup,
    acuity: Option<u8>,
    race_group: RaceGroup,
    age_years: u32,
    age_group: AgeGroup,
    gender: Gender,
    insurance_group: InsuranceGroup,
    language_group: LanguageGroup,
    disposition_raw: String,
}

impl From<&CaseOutcomes> for OutcomeRow {
    fn from(o: &CaseOutcomes) -> Self {
        OutcomeRow {
            case_id: o.case_id.clone(),
            duration_seconds: o.duration_seconds,
            total_redos: o.redo.total_redos,
            clinical_redos: o.redo.clinical_redos,
            waste_redos: o.redo.waste_redos,
            waste_pct: o.redo.waste_pct,
            fitness: o.fitness,
            decision_group: o.decision_group,
            acuity: o.acuity,
            race_group: o.profile.race_group,
            age_years: o.profile.age_years,
            age_group: o.profile.age_group,
            gender: o.profile.gender,
            insurance_group: o.profile.insurance_group,
            language_group: o.profile.language_group,
            disposition_raw: o.profile.disposition_raw.clone(),
        }
    }
}

impl From<OutcomeRow> for CaseOutcomes {
    fn from(r: OutcomeRow) -> Self {
        CaseOutcomes {
            case_id: r.case_id,
            duration_seconds: r.duration_seconds,
            redo: RedoBreakdown {
                total_redos: r.total_redos,
                clinical_redos: r.clinical_redos,
                waste_redos: r.waste_redos,
                waste_pct: r.waste_pct,
            },
            fitness: r.fitness,
            decision_group: r.decision_group,
            acuity: r.acuity,
            profile: DemographicProfile {
                race_group: r.race_group,
                age_years: r.age_years,
                age_group: r.age_group,
                gender: r.gender,
                insurance_group: r.insurance_group,
                language_group: r.language_group,
                acuity: r.acuity,
                disposition_raw: r.disposition_raw,
            },
        }
    }
}

pub fn write_outcomes<W: Write>(writer: W, outcomes: &[CaseOutcomes]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for o in outcomes {
        w.serialize(OutcomeRow::from(o))?;
    }
    w.flush().map_err(|e| Error::io("<outcomes csv>", e))?;
    Ok(())
}

pub fn write_outcomes_path(path: &Path, outcomes: &[CaseOutcomes]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_outcomes(std::io::BufWriter::new(file), outcomes)
}

pub fn read_outcomes<R: Read>(reader: R) -> Result<Vec<CaseOutcomes>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<OutcomeRow>()
        .map(|row| Ok(row?.into()))
        .collect()
}

pub fn read_outcomes_path(path: &Path) -> Result<Vec<CaseOutcomes>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_outcomes(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::test_support::log_from_traces;
    use crate::discovery::{count_directly_follows, mine_dependency_graph, to_process_net};
    use crate::eventlog::activity::*;
    use crate::eventlog::test_support::{event, profile, ts};
    use crate::eventlog::Event;

    fn case_of(events: Vec<Event>) -> Case {
        Case::new("c".into(), events).unwrap()
    }

    fn triage(at: chrono::NaiveDateTime, acuity: Option<u8>) -> Event {
        let mut e = event("c", TRIAGE, at);
        e.attributes.acuity = acuity;
        e
    }

    #[test]
    fn durations() {
        assert_eq!(
            case_duration(&case_of(vec![event("c", ENTER, ts(10, 0, 0))])),
            0
        );
        let c = case_of(vec![
            event("c", ENTER, ts(10, 0, 0)),
            event("c", DISCHARGE, ts(14, 30, 0)),
        ]);
        assert_eq!(case_duration(&c), 16_200);
        let c = case_of(vec![
            event("c", ENTER, ts(10, 0, 0)),
            event("c", TRIAGE, ts(10, 5, 0)),
            event("c", DISCHARGE, ts(12, 0, 0)),
        ]);
        assert_eq!(case_duration(&c), 7_200);
    }

    #[test]
    fn repeated_enter_is_waste() {
        let c = case_of(vec![
            event("c", ENTER, ts(10, 0, 0)),
            event("c", ENTER, ts(10, 1, 0)),
            event("c", DISCHARGE, ts(11, 0, 0)),
        ]);
        let r = classify_redos(&c, 30);
        assert_eq!((r.total_redos, r.clinical_redos, r.waste_redos), (1, 0, 1));
        assert!((r.waste_pct - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triage_rules() {
        let c = case_of(vec![
            triage(ts(10, 0, 0), Some(3)),
            triage(ts(10, 45, 0), Some(2)),
        ]);
        assert_eq!(classify_redos(&c, 30).clinical_redos, 1);
        let c = case_of(vec![
            triage(ts(10, 0, 0), Some(3)),
            triage(ts(10, 10, 0), Some(3)),
        ]);
        assert_eq!(classify_redos(&c, 30).waste_redos, 1);
        // Decrease in urgency also counts as a change.
        let c = case_of(vec![
            triage(ts(10, 0, 0), Some(2)),
            triage(ts(10, 45, 0), Some(3)),
        ]);
        assert_eq!(classify_redos(&c, 30).clinical_redos, 1);
        // Exactly at the threshold is not "exceeds".
        let c = case_of(vec![
            triage(ts(10, 0, 0), Some(3)),
            triage(ts(10, 30, 0), Some(2)),
        ]);
        assert_eq!(classify_redos(&c, 30).waste_redos, 1);
        let c = case_of(vec![
            triage(ts(10, 0, 0), None),
            triage(ts(11, 0, 0), Some(2)),
        ]);
        assert_eq!(classify_redos(&c, 30).waste_redos, 1);
    }

    #[test]
    fn clinical_repeats() {
        let c = case_of(vec![
            event("c", ENTER, ts(10, 0, 0)),
            event("c", TRIAGE, ts(10, 1, 0)),
            event("c", VITAL_SIGN_CHECK, ts(10, 2, 0)),
            event("c", VITAL_SIGN_CHECK, ts(10, 3, 0)),
            event("c", VITAL_SIGN_CHECK, ts(10, 4, 0)),
            event("c", DISCHARGE, ts(10, 5, 0)),
        ]);
        let r = classify_redos(&c, 30);
        assert_eq!((r.total_redos, r.clinical_redos, r.waste_redos), (2, 2, 0));
        assert_eq!(r.waste_pct, 0.0);
        let c = case_of(vec![
            event("c", "Lab draw", ts(1, 0, 0)),
            event("c", "Lab draw", ts(2, 0, 0)),
        ]);
        assert_eq!(classify_redos(&c, 30).clinical_redos, 1);
    }

    #[test]
    fn disposition_mapping() {
        assert_eq!(decision_group("HOSPICE"), DecisionGroup::Death);
        assert_eq!(
            decision_group("SKILLED NURSING FACILITY"),
            DecisionGroup::Facility
        );
        assert_eq!(decision_group("HOME HEALTH CARE"), DecisionGroup::Home);
        assert_eq!(
            decision_group("AGAINST ADVICE"),
            DecisionGroup::AgainstAdvice
        );
        assert_eq!(decision_group("home"), DecisionGroup::Home);
        assert_eq!(decision_group("ADMITTED"), DecisionGroup::Unknown);
        assert_eq!(disposition_lookup("ADMITTED"), None);
    }

    #[test]
    fn extract_fixture_case() {
        let traces: Vec<&[&str]> = vec![&[ENTER, TRIAGE, DISCHARGE]; 10];
        let df = count_directly_follows(&log_from_traces(&traces));
        let net = to_process_net(&mine_dependency_graph(&df, 0.8).unwrap()).unwrap();

        let mut case = case_of(vec![
            event("c", ENTER, ts(10, 0, 0)),
            event("c", ENTER, ts(10, 2, 0)),
            event("c", TRIAGE, ts(10, 10, 0)),
            event("c", DISCHARGE, ts(12, 0, 0)),
        ]);
        let mut p = profile(RaceGroup::Caucasian, InsuranceGroup::Public);
        p.disposition_raw = "REHAB".into();
        case.profile = Some(p);
        let log = crate::eventlog::test_support::log_of(vec![case]);
        let (out, report) = extract_outcomes(&log, &net, 30).unwrap();
        assert_eq!(out.len(), 1);
        let o = &out[0];
        assert_eq!(o.duration_seconds, 7_200);
        assert_eq!(o.redo.waste_redos, 1);
        assert_eq!(o.redo.waste_pct, 0.25);
        assert_eq!(o.decision_group, DecisionGroup::Facility);
        assert_eq!(o.acuity, Some(3));
        // Second Enter fires with a missing source token and leaves one on p(Enter,Triage).
        assert!((o.fitness - (0.5 * (1.0 - 1.0 / 5.0) + 0.5 * (1.0 - 1.0 / 5.0))).abs() < 1e-12);
        assert_eq!(report, OutcomeReport::default());
    }

    #[test]
    fn missing_profile_is_an_error() {
        let traces: Vec<&[&str]> = vec![&[ENTER, DISCHARGE]; 10];
        let log = log_from_traces(&traces);
        let net =
            to_process_net(&mine_dependency_graph(&count_directly_follows(&log), 0.8).unwrap())
                .unwrap();
        assert!(extract_outcomes(&log, &net, 30).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let o = CaseOutcomes {
            case_id: "30000001".into(),
            duration_seconds: 3600,
            redo: RedoBreakdown {
                total_redos: 2,
                clinical_redos: 1,
                waste_redos: 1,
                waste_pct: 0.125,
            },
            fitness: 0.875,
            decision_group: DecisionGroup::AgainstAdvice,
            acuity: None,
            profile: DemographicProfile {
                acuity: None,
                ..profile(RaceGroup::Other, InsuranceGroup::Unknown)
            },
        };
        let mut buf = Vec::new();
        write_outcomes(&mut buf, std::slice::from_ref(&o)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("case_id,duration_seconds,total_redos"));
        assert!(text.contains("AGAINST_ADVICE"));
        assert_eq!(read_outcomes(buf.as_slice()).unwrap(), vec![o]);
    }
}
