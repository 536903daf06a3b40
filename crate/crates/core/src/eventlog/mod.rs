//! Event-log data model, CSV ingestion, imputation and demographic mapping.
//!
//! A log moves through these stages before analysis:
//! [`load_log`] → [`impute_case_attributes`] → [`map_log_demographics`] →
//! [`filter_for_analysis`].

pub(crate) mod demographics;
mod impute;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

pub use demographics::{
    insurance_lookup, language_lookup, map_demographics, map_log_demographics, race_lookup,
    AgeBands, MappingCounters, MappingReport, INSURANCE_TABLE, LANGUAGE_TABLE, RACE_TABLE,
};
pub use impute::{impute_case_attributes, ImputationReport};
pub use io::{load_log, load_log_path, write_log, write_log_path, ColumnMap, CsvOptions};

use crate::error::{Error, Result};

/// Activity vocabulary of MIMICEL-style ED logs.
pub mod activity {
    pub const ENTER: &str = "Enter the ED";
    pub const TRIAGE: &str = "Triage in the ED";
    pub const VITAL_SIGN_CHECK: &str = "Vital sign check";
    pub const MEDICINE_DISPENSATIONS: &str = "Medicine dispensations";
    pub const MEDICINE_RECONCILIATION: &str = "Medicine reconciliation";
    pub const DISCHARGE: &str = "Discharge from the ED";
}

/// Attribute values as they appear in the source file, before grouping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawAttributes {
    pub race: Option<Arc<str>>,
    pub age: Option<Arc<str>>,
    pub gender: Option<Arc<str>>,
    pub insurance: Option<Arc<str>>,
    pub language: Option<Arc<str>>,
    pub disposition: Option<Arc<str>>,
    /// Acuity recorded on this event (typically only on triage rows).
    pub acuity: Option<u8>,
}

/// The string-valued case attributes subject to case-wide imputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RawField {
    Race,
    Age,
    Gender,
    Insurance,
    Language,
    Disposition,
}

impl RawField {
    pub const ALL: [RawField; 6] = [
        RawField::Race,
        RawField::Age,
        RawField::Gender,
        RawField::Insurance,
        RawField::Language,
        RawField::Disposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RawField::Race => "race",
            RawField::Age => "age",
            RawField::Gender => "gender",
            RawField::Insurance => "insurance",
            RawField::Language => "language",
            RawField::Disposition => "disposition",
        }
    }
}

impl RawAttributes {
    pub fn get(&self, field: RawField) -> Option<&Arc<str>> {
        match field {
            RawField::Race => self.race.as_ref(),
            RawField::Age => self.age.as_ref(),
            RawField::Gender => self.gender.as_ref(),
            RawField::Insurance => self.insurance.as_ref(),
            RawField::Language => self.language.as_ref(),
            RawField::Disposition => self.disposition.as_ref(),
        }
    }

    pub fn slot(&mut self, field: RawField) -> &mut Option<Arc<str>> {
        match field {
            RawField::Race => &mut self.race,
            RawField::Age => &mut self.age,
            RawField::Gender => &mut self.gender,
            RawField::Insurance => &mut self.insurance,
            RawField::Language => &mut self.language,
            RawField::Disposition => &mut self.disposition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub case_id: Arc<str>,
    pub activity: Arc<str>,
    pub timestamp: NaiveDateTime,
    pub attributes: RawAttributes,
    /// Unmapped source columns, keyed by header name.
    pub extra: BTreeMap<Arc<str>, Arc<str>>,
}

/// One ED stay: events in ascending timestamp order, ties in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub case_id: Arc<str>,
    pub events: Vec<Event>,
    /// Filled in by [`map_log_demographics`].
    pub profile: Option<DemographicProfile>,
}

impl Case {
    /// Builds a case, sorting events stably by timestamp.
    pub fn new(case_id: Arc<str>, mut events: Vec<Event>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Validation(format!("case {case_id} has no events")));
        }
        if let Some(e) = events.iter().find(|e| e.case_id != case_id) {
            return Err(Error::Validation(format!(
                "event with case_id {} placed in case {case_id}",
                e.case_id
            )));
        }
        events.sort_by_key(|e| e.timestamp);
        Ok(Case {
            case_id,
            events,
            profile: None,
        })
    }

    /// Case-level raw attributes: the first non-missing value of each field
    /// in event order, and the earliest recorded acuity.
    pub fn raw_attributes(&self) -> RawAttributes {
        let mut raw = RawAttributes::default();
        for field in RawField::ALL {
            *raw.slot(field) = self
                .events
                .iter()
                .find_map(|e| e.attributes.get(field).cloned());
        }
        raw.acuity = self.events.iter().find_map(|e| e.attributes.acuity);
        raw
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    /// Data rows read from the source, excluding the header.
    pub rows_read: usize,
    pub rows_rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub cases: Vec<Case>,
    pub provenance: Provenance,
}

impl EventLog {
    /// Validates case-id uniqueness and the row-count invariant.
    pub fn new(cases: Vec<Case>, provenance: Provenance) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(cases.len());
        for case in &cases {
            if !seen.insert(case.case_id.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate case_id {}",
                    case.case_id
                )));
            }
        }
        let log = EventLog { cases, provenance };
        let accepted = log.provenance.rows_read - log.provenance.rows_rejected;
        if accepted != log.event_count() {
            return Err(Error::Validation(format!(
                "provenance reports {accepted} accepted rows but log holds {} events",
                log.event_count()
            )));
        }
        Ok(log)
    }

    pub fn event_count(&self) -> usize {
        self.cases.iter().map(|c| c.events.len()).sum()
    }

    pub fn case(&self, case_id: &str) -> Option<&Case> {
        self.cases.iter().find(|c| &*c.case_id == case_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RaceGroup {
    Caucasian,
    NonCaucasian,
    Multiethnic,
    Other,
    Deleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    Until45,
    Until65,
    Older,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InsuranceGroup {
    Public,
    Private,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LanguageGroup {
    English,
    NonEnglish,
    Unknown,
}

macro_rules! labelled {
    ($($ty:ty { $($variant:ident),* })*) => {$(
        impl $ty {
            pub const ALL: &'static [$ty] = &[$(<$ty>::$variant),*];

            pub fn label(self) -> &'static str {
                match self { $(<$ty>::$variant => stringify!($variant)),* }
            }

            pub fn from_label(s: &str) -> Option<Self> {
                match s { $(stringify!($variant) => Some(<$ty>::$variant),)* _ => None }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
    )*};
}

labelled! {
    RaceGroup { Caucasian, NonCaucasian, Multiethnic, Other, Deleted }
    AgeGroup { Until45, Until65, Older }
    Gender { Female, Male, Unknown }
    InsuranceGroup { Public, Private, Unknown }
    LanguageGroup { English, NonEnglish, Unknown }
}

/// Normalized sensitive attributes of a case, plus its acuity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicProfile {
    pub race_group: RaceGroup,
    pub age_years: u32,
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub insurance_group: InsuranceGroup,
    pub language_group: LanguageGroup,
    pub acuity: Option<u8>,
    pub disposition_raw: String,
}

impl DemographicProfile {
    /// Group label of this profile under `attribute`.
    pub fn group_label(&self, attribute: Attribute) -> &'static str {
        match attribute {
            Attribute::Race => self.race_group.label(),
            Attribute::AgeGroup => self.age_group.label(),
            Attribute::Gender => self.gender.label(),
            Attribute::Insurance => self.insurance_group.label(),
            Attribute::Language => self.language_group.label(),
        }
    }
}

/// Sensitive attributes tested for disparities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Race,
    AgeGroup,
    Gender,
    Insurance,
    Language,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Race,
        Attribute::AgeGroup,
        Attribute::Gender,
        Attribute::Insurance,
        Attribute::Language,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Attribute::Race => "Race",
            Attribute::AgeGroup => "Age group",
            Attribute::Gender => "Gender",
            Attribute::Insurance => "Insurance",
            Attribute::Language => "Language",
        }
    }

    /// Every group label this attribute can take.
    pub fn group_labels(self) -> Vec<&'static str> {
        match self {
            Attribute::Race => RaceGroup::ALL.iter().map(|g| g.label()).collect(),
            Attribute::AgeGroup => AgeGroup::ALL.iter().map(|g| g.label()).collect(),
            Attribute::Gender => Gender::ALL.iter().map(|g| g.label()).collect(),
            Attribute::Insurance => InsuranceGroup::ALL.iter().map(|g| g.label()).collect(),
            Attribute::Language => LanguageGroup::ALL.iter().map(|g| g.label()).collect(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub removed_cases: usize,
}

/// Drops cases whose race group is `Deleted`. Unknown/Other groups stay.
///
/// Cases without a mapped profile are kept untouched.
pub fn filter_for_analysis(log: EventLog) -> (EventLog, FilterReport) {
    let EventLog {
        cases,
        mut provenance,
    } = log;
    let before = cases.len();
    let mut dropped_rows = 0;
    let cases: Vec<Case> = cases
        .into_iter()
        .filter(|c| {
            let deleted = c
                .profile
                .as_ref()
                .is_some_and(|p| p.race_group == RaceGroup::Deleted);
            if deleted {
                dropped_rows += c.events.len();
            }
            !deleted
        })
        .collect();
    // Removed cases are accounted as rejected so the row invariant still holds.
    provenance.rows_rejected += dropped_rows;
    let report = FilterReport {
        removed_cases: before - cases.len(),
    };
    (EventLog { cases, provenance }, report)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use chrono::NaiveDate;

    pub fn ts(h: u32, m: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2150, 1, 1)
            .unwrap()
            .and_hms_opt(h, m, s)
            .unwrap()
    }

    pub fn event(case: &str, activity: &str, at: NaiveDateTime) -> Event {
        Event {
            case_id: case.into(),
            activity: activity.into(),
            timestamp: at,
            attributes: RawAttributes::default(),
            extra: BTreeMap::new(),
        }
    }

    pub fn profile(race: RaceGroup, insurance: InsuranceGroup) -> DemographicProfile {
        DemographicProfile {
            race_group: race,
            age_years: 40,
            age_group: AgeGroup::Until45,
            gender: Gender::Female,
            insurance_group: insurance,
            language_group: LanguageGroup::English,
            acuity: Some(3),
            disposition_raw: "HOME".into(),
        }
    }

    pub fn log_of(cases: Vec<Case>) -> EventLog {
        let rows = cases.iter().map(|c| c.events.len()).sum();
        EventLog::new(
            cases,
            Provenance {
                source: "test".into(),
                rows_read: rows,
                rows_rejected: 0,
            },
        )
        .unwrap()
    }
}
