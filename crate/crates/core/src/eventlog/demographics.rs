//! Lookup tables that collapse raw MIMIC category strings into analysis groups.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{
    AgeGroup, DemographicProfile, EventLog, Gender, InsuranceGroup, LanguageGroup, RaceGroup,
    RawAttributes,
};
use crate::error::{Error, Result};

/// Raw race string, intermediate category, analysis group.
pub const RACE_TABLE: [(&str, &str, RaceGroup); 33] = [
    ("WHITE", "WHITE", RaceGroup::Caucasian),
    ("WHITE -- OTHER EUROPEAN", "WHITE", RaceGroup::Caucasian),
    ("WHITE -- RUSSIAN", "WHITE", RaceGroup::Caucasian),
    ("WHITE -- BRAZILIAN", "WHITE", RaceGroup::Caucasian),
    ("PORTUGUESE", "WHITE", RaceGroup::Caucasian),
    ("WHITE -- EASTERN EUROPEAN", "WHITE", RaceGroup::Caucasian),
    ("HISPANIC OR LATINO", "UNKNOWN_RACE", RaceGroup::Deleted),
    (
        "PATIENT DECLINED TO ANSWER",
        "UNKNOWN_RACE",
        RaceGroup::Deleted,
    ),
    (
        "MULTIPLE RACE/ETHNICITY",
        "UNKNOWN_RACE",
        RaceGroup::Deleted,
    ),
    ("UNABLE TO OBTAIN", "UNKNOWN_RACE", RaceGroup::Deleted),
    (
        "HISPANIC/LATINO -- PUERTO RICAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    (
        "HISPANIC/LATINO -- DOMINICAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    ("UNKNOWN", "MULTI_ETHNIC", RaceGroup::Multiethnic),
    (
        "HISPANIC/LATINO -- GUATEMALAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    (
        "HISPANIC/LATINO -- SALVADORAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    (
        "HISPANIC/LATINO -- COLUMBIAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    (
        "HISPANIC/LATINO -- MEXICAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    ("SOUTH AMERICAN", "MULTI_ETHNIC", RaceGroup::Multiethnic),
    (
        "HISPANIC/LATINO -- HONDURAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    (
        "HISPANIC/LATINO -- CUBAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    (
        "HISPANIC/LATINO -- CENTRAL AMERICAN",
        "MULTI_ETHNIC",
        RaceGroup::Multiethnic,
    ),
    ("BLACK/AFRICAN AMERICAN", "BLACK", RaceGroup::NonCaucasian),
    ("BLACK/CAPE VERDEAN", "BLACK", RaceGroup::NonCaucasian),
    ("BLACK/AFRICAN", "BLACK", RaceGroup::NonCaucasian),
    ("BLACK/CARIBBEAN ISLAND", "BLACK", RaceGroup::NonCaucasian),
    ("ASIAN -- CHINESE", "ASIAN", RaceGroup::NonCaucasian),
    ("ASIAN", "ASIAN", RaceGroup::NonCaucasian),
    ("ASIAN -- ASIAN INDIAN", "ASIAN", RaceGroup::NonCaucasian),
    (
        "ASIAN -- SOUTH EAST ASIAN",
        "ASIAN",
        RaceGroup::NonCaucasian,
    ),
    (
        "AMERICAN INDIAN/ALASKA NATIVE",
        "NATIVE_AMERICAN",
        RaceGroup::NonCaucasian,
    ),
    ("ASIAN -- KOREAN", "ASIAN", RaceGroup::NonCaucasian),
    (
        "NATIVE HAWAIIAN OR OTHER PACIFIC ISLANDER",
        "PACIFIC_ISLANDER",
        RaceGroup::NonCaucasian,
    ),
    ("OTHER", "OTHER", RaceGroup::Other),
];

pub const LANGUAGE_TABLE: [(&str, LanguageGroup); 20] = [
    ("ENGLISH", LanguageGroup::English),
    ("SPANISH", LanguageGroup::NonEnglish),
    ("RUSSIAN", LanguageGroup::NonEnglish),
    ("CHINESE", LanguageGroup::NonEnglish),
    ("KABUVERDIANU", LanguageGroup::NonEnglish),
    ("HAITIAN", LanguageGroup::NonEnglish),
    ("PORTUGUESE", LanguageGroup::NonEnglish),
    ("OTHER", LanguageGroup::NonEnglish),
    ("VIETNAMESE", LanguageGroup::NonEnglish),
    ("MODERN GREEK (1453--)", LanguageGroup::NonEnglish),
    ("ITALIAN", LanguageGroup::NonEnglish),
    ("ARABIC", LanguageGroup::NonEnglish),
    ("AMERICAN SIGN LANGUAGE", LanguageGroup::NonEnglish),
    ("POLISH", LanguageGroup::NonEnglish),
    ("PERSIAN", LanguageGroup::NonEnglish),
    ("KOREAN", LanguageGroup::NonEnglish),
    ("THAI", LanguageGroup::NonEnglish),
    ("FRENCH", LanguageGroup::NonEnglish),
    ("AMHARIC", LanguageGroup::NonEnglish),
    ("UNKNOWN", LanguageGroup::Unknown),
];

pub const INSURANCE_TABLE: [(&str, InsuranceGroup); 6] = [
    ("MEDICARE", InsuranceGroup::Public),
    ("MEDICAID", InsuranceGroup::Public),
    ("PRIVATE", InsuranceGroup::Private),
    ("OTHER", InsuranceGroup::Private),
    ("UNKNOWN", InsuranceGroup::Unknown),
    ("NO CHARGE", InsuranceGroup::Unknown),
];

/// Canonical lookup key: upper case, single spaces, and any run of dashes
/// (ASCII `-`/`--`, en or em dash) collapsed to one `-`. The source export
/// writes `WHITE - RUSSIAN` where the reference tables print `WHITE -- RUSSIAN`.
pub(crate) fn canonical_key(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    let mut last_dash = false;
    for ch in raw.trim().chars() {
        let ch = match ch {
            '\u{2013}' | '\u{2014}' => '-',
            c => c,
        };
        if ch.is_whitespace() {
            pending_space = true;
            continue;
        }
        if ch == '-' && last_dash {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        last_dash = ch == '-';
        out.extend(ch.to_uppercase());
    }
    out
}

fn index<T: Copy>(rows: impl Iterator<Item = (&'static str, T)>) -> HashMap<String, T> {
    rows.map(|(k, v)| (canonical_key(k), v)).collect()
}

/// Race group for a raw race string, or `None` if the string is not listed.
pub fn race_lookup(raw: &str) -> Option<RaceGroup> {
    static INDEX: OnceLock<HashMap<String, RaceGroup>> = OnceLock::new();
    INDEX
        .get_or_init(|| index(RACE_TABLE.iter().map(|&(k, _, g)| (k, g))))
        .get(&canonical_key(raw))
        .copied()
}

pub fn language_lookup(raw: &str) -> Option<LanguageGroup> {
    static INDEX: OnceLock<HashMap<String, LanguageGroup>> = OnceLock::new();
    INDEX
        .get_or_init(|| index(LANGUAGE_TABLE.iter().copied()))
        .get(&canonical_key(raw))
        .copied()
}

pub fn insurance_lookup(raw: &str) -> Option<InsuranceGroup> {
    static INDEX: OnceLock<HashMap<String, InsuranceGroup>> = OnceLock::new();
    INDEX
        .get_or_init(|| index(INSURANCE_TABLE.iter().copied()))
        .get(&canonical_key(raw))
        .copied()
}

fn gender_lookup(raw: &str) -> Option<Gender> {
    match canonical_key(raw).as_str() {
        "F" | "FEMALE" => Some(Gender::Female),
        "M" | "MALE" => Some(Gender::Male),
        _ => None,
    }
}

/// Inclusive upper bounds of the two younger age bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeBands {
    pub until45_max: u32,
    pub until65_max: u32,
}

impl Default for AgeBands {
    fn default() -> Self {
        AgeBands {
            until45_max: 45,
            until65_max: 65,
        }
    }
}

impl AgeBands {
    pub fn band(&self, age: u32) -> AgeGroup {
        if age <= self.until45_max {
            AgeGroup::Until45
        } else if age <= self.until65_max {
            AgeGroup::Until65
        } else {
            AgeGroup::Older
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.until45_max >= self.until65_max {
            return Err(Error::config(
                "thresholds.age_bands",
                "until45_max must be below until65_max",
            ));
        }
        Ok(())
    }
}

/// Per-attribute counts of raw values that were missing or not in a table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingCounters {
    pub race_unmapped: usize,
    pub gender_unmapped: usize,
    pub insurance_unmapped: usize,
    pub language_unmapped: usize,
}

impl MappingCounters {
    pub fn total(&self) -> usize {
        self.race_unmapped + self.gender_unmapped + self.insurance_unmapped + self.language_unmapped
    }
}

fn parse_age(raw: Option<&str>) -> Result<u32> {
    let raw = raw.map(str::trim).unwrap_or("");
    let value: f64 = raw
        .parse()
        .map_err(|_| Error::Validation(format!("age {raw:?} is not numeric")))?;
    if !value.is_finite() || value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(Error::Validation(format!(
            "age {raw:?} is not a non-negative integer"
        )));
    }
    Ok(value as u32)
}

/// Maps one case's raw attributes to analysis groups.
///
/// Unrecognized or missing strings fall into the attribute's Other/Unknown
/// bucket and bump the matching counter. Age must be a non-negative integer.
pub fn map_demographics(
    raw: &RawAttributes,
    bands: &AgeBands,
    counters: &mut MappingCounters,
) -> Result<DemographicProfile> {
    let age_years = parse_age(raw.age.as_deref())?;

    let race_group = raw
        .race
        .as_deref()
        .and_then(race_lookup)
        .unwrap_or_else(|| {
            counters.race_unmapped += 1;
            RaceGroup::Other
        });
    let gender = raw
        .gender
        .as_deref()
        .and_then(gender_lookup)
        .unwrap_or_else(|| {
            counters.gender_unmapped += 1;
            Gender::Unknown
        });
    let insurance_group = raw
        .insurance
        .as_deref()
        .and_then(insurance_lookup)
        .unwrap_or_else(|| {
            counters.insurance_unmapped += 1;
            InsuranceGroup::Unknown
        });
    let language_group = raw
        .language
        .as_deref()
        .and_then(language_lookup)
        .unwrap_or_else(|| {
            counters.language_unmapped += 1;
            LanguageGroup::Unknown
        });

    Ok(DemographicProfile {
        race_group,
        age_years,
        age_group: bands.band(age_years),
        gender,
        insurance_group,
        language_group,
        acuity: raw.acuity,
        disposition_raw: raw.disposition.as_deref().unwrap_or("").to_string(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingReport {
    pub counters: MappingCounters,
    /// Cases dropped because their age failed validation.
    pub invalid_cases: usize,
}

/// Attaches a [`DemographicProfile`] to every case. Cases whose attributes
/// fail validation are dropped and counted rather than aborting the batch.
pub fn map_log_demographics(log: EventLog, bands: &AgeBands) -> (EventLog, MappingReport) {
    let mut report = MappingReport::default();
    let EventLog {
        cases,
        mut provenance,
    } = log;
    let mut kept = Vec::with_capacity(cases.len());
    for mut case in cases {
        match map_demographics(&case.raw_attributes(), bands, &mut report.counters) {
            Ok(profile) => {
                case.profile = Some(profile);
                kept.push(case);
            }
            Err(_) => {
                report.invalid_cases += 1;
                provenance.rows_rejected += case.events.len();
            }
        }
    }
    (
        EventLog {
            cases: kept,
            provenance,
        },
        report,
    )
}
