use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::esi::DangerZone;
use crate::error::{Error, Result};
use crate::eventlog::{
    activity, AgeGroup, Attribute, Gender, InsuranceGroup, LanguageGroup, RaceGroup,
};
use crate::outcomes::DecisionGroup;

/// Relative weights over the groups of each sensitive attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Population {
    pub race: BTreeMap<RaceGroup, f64>,
    pub age: BTreeMap<AgeGroup, f64>,
    pub gender: BTreeMap<Gender, f64>,
    pub insurance: BTreeMap<InsuranceGroup, f64>,
    pub language: BTreeMap<LanguageGroup, f64>,
}

impl Default for Population {
    fn default() -> Self {
        Population {
            race: [
                (RaceGroup::Caucasian, 0.60),
                (RaceGroup::NonCaucasian, 0.25),
                (RaceGroup::Multiethnic, 0.10),
                (RaceGroup::Other, 0.05),
            ]
            .into(),
            age: [
                (AgeGroup::Until45, 0.40),
                (AgeGroup::Until65, 0.35),
                (AgeGroup::Older, 0.25),
            ]
            .into(),
            gender: [(Gender::Female, 0.52), (Gender::Male, 0.48)].into(),
            insurance: [
                (InsuranceGroup::Public, 0.55),
                (InsuranceGroup::Private, 0.35),
                (InsuranceGroup::Unknown, 0.10),
            ]
            .into(),
            language: [
                (LanguageGroup::English, 0.88),
                (LanguageGroup::NonEnglish, 0.10),
                (LanguageGroup::Unknown, 0.02),
            ]
            .into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VitalDistribution {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl VitalDistribution {
    fn validate(&self, key: &str) -> Result<()> {
        let ok = self.sd >= 0.0 && self.min > 0.0 && self.min <= self.max && self.mean.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::config(key, "need sd ≥ 0 and 0 < min ≤ max"))
        }
    }
}

/// Probabilities driving sampled presentations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PresentationModel {
    pub life_saving_prob: f64,
    pub high_risk_prob: f64,
    pub confused_prob: f64,
    /// Probability the pain score is 7 or more.
    pub severe_pain_prob: f64,
    /// Weight of needing `i` resources at index `i`.
    pub resource_weights: Vec<f64>,
    pub heart_rate: VitalDistribution,
    pub respiratory_rate: VitalDistribution,
    pub spo2: VitalDistribution,
}

impl Default for PresentationModel {
    fn default() -> Self {
        PresentationModel {
            life_saving_prob: 0.03,
            high_risk_prob: 0.15,
            confused_prob: 0.05,
            severe_pain_prob: 0.20,
            resource_weights: vec![0.12, 0.20, 0.35, 0.33],
            heart_rate: VitalDistribution {
                mean: 85.0,
                sd: 15.0,
                min: 30.0,
                max: 200.0,
            },
            respiratory_rate: VitalDistribution {
                mean: 17.0,
                sd: 3.0,
                min: 6.0,
                max: 50.0,
            },
            spo2: VitalDistribution {
                mean: 97.0,
                sd: 2.0,
                min: 60.0,
                max: 100.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalMinutes {
    pub median_minutes: f64,
    pub sigma: f64,
}

/// Override for one activity pair, optionally limited to one acuity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDuration {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub acuity: Option<u8>,
    pub median_minutes: f64,
    pub sigma: f64,
}

/// Log-normal gap between consecutive events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DurationModel {
    pub by_acuity: BTreeMap<u8, LogNormalMinutes>,
    pub steps: Vec<StepDuration>,
}

impl Default for DurationModel {
    fn default() -> Self {
        let by_acuity = [(1, 25.0), (2, 30.0), (3, 35.0), (4, 25.0), (5, 20.0)]
            .into_iter()
            .map(|(a, m)| {
                (
                    a,
                    LogNormalMinutes {
                        median_minutes: m,
                        sigma: 0.6,
                    },
                )
            })
            .collect();
        DurationModel {
            by_acuity,
            steps: Vec::new(),
        }
    }
}

impl DurationModel {
    /// Most specific parameters for the gap `from → to` at `acuity`.
    pub fn params(&self, from: &str, to: &str, acuity: u8) -> LogNormalMinutes {
        let step = |want: Option<u8>| {
            self.steps
                .iter()
                .find(|s| s.from == from && s.to == to && s.acuity == want)
                .map(|s| LogNormalMinutes {
                    median_minutes: s.median_minutes,
                    sigma: s.sigma,
                })
        };
        step(Some(acuity))
            .or_else(|| step(None))
            .unwrap_or(self.by_acuity[&acuity])
    }
}

/// One targeted distortion for cases in `(attribute = group, acuity)`.
/// Without `acuity` the entry applies at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasEntry {
    pub attribute: Attribute,
    pub group: String,
    #[serde(default)]
    pub acuity: Option<u8>,
    #[serde(default = "one")]
    pub time_multiplier: f64,
    #[serde(default)]
    pub extra_waste_redo_prob: f64,
    #[serde(default)]
    pub decision_shift: Option<BTreeMap<DecisionGroup, f64>>,
}

fn one() -> f64 {
    1.0
}

impl BiasEntry {
    pub fn validate(&self, key: &str) -> Result<()> {
        if !self.attribute.group_labels().contains(&self.group.as_str()) {
            return Err(Error::config(
                format!("{key}.group"),
                format!("{:?} is not a group of {}", self.group, self.attribute),
            ));
        }
        check_acuity(self.acuity, &format!("{key}.acuity"))?;
        if !(self.time_multiplier.is_finite() && self.time_multiplier > 0.0) {
            return Err(Error::config(
                format!("{key}.time_multiplier"),
                "must be positive",
            ));
        }
        check_prob(
            self.extra_waste_redo_prob,
            &format!("{key}.extra_waste_redo_prob"),
        )?;
        if let Some(shift) = &self.decision_shift {
            check_weights(shift.values(), &format!("{key}.decision_shift"))?;
        }
        Ok(())
    }
}

/// Ordered bias entries; empty means no bias.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasConfig {
    pub entries: Vec<BiasEntry>,
}

impl BiasConfig {
    pub fn identity() -> Self {
        BiasConfig::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            e.validate(&format!("bias[{i}]"))?;
        }
        Ok(())
    }
}

/// Everything the generator needs. Every field has a default, so `{}` is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub n_cases: usize,
    pub population: Population,
    pub presentation: PresentationModel,
    /// Activities between triage and discharge, in order.
    pub care_pathway: Vec<String>,
    /// Chance of each additional immediate vital sign check.
    pub vitals_repeat_prob: f64,
    /// Chance of a waste re-do for any case, before bias.
    pub base_waste_redo_prob: f64,
    pub durations: DurationModel,
    /// Decision-group weights per acuity.
    pub decisions: BTreeMap<u8, BTreeMap<DecisionGroup, f64>>,
    pub danger_zone: DangerZone,
    pub bias: BiasConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        use DecisionGroup::*;
        let decisions = [
            (1, [0.15, 0.55, 0.15, 0.02, 0.13]),
            (2, [0.35, 0.35, 0.05, 0.03, 0.22]),
            (3, [0.45, 0.20, 0.02, 0.03, 0.30]),
            (4, [0.60, 0.05, 0.005, 0.04, 0.305]),
            (5, [0.65, 0.02, 0.003, 0.05, 0.277]),
        ]
        .into_iter()
        .map(|(a, w)| {
            (
                a,
                [Home, Facility, Death, AgainstAdvice, Unknown]
                    .into_iter()
                    .zip(w)
                    .collect(),
            )
        })
        .collect();
        Scenario {
            n_cases: 1000,
            population: Population::default(),
            presentation: PresentationModel::default(),
            care_pathway: vec![
                activity::VITAL_SIGN_CHECK.to_string(),
                activity::MEDICINE_RECONCILIATION.to_string(),
                activity::MEDICINE_DISPENSATIONS.to_string(),
            ],
            vitals_repeat_prob: 0.0,
            base_waste_redo_prob: 0.0,
            durations: DurationModel::default(),
            decisions,
            danger_zone: DangerZone::default(),
            bias: BiasConfig::default(),
        }
    }
}

fn check_prob(p: f64, key: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("probability {p} outside [0, 1]"),
        ))
    }
}

fn check_acuity(acuity: Option<u8>, key: &str) -> Result<()> {
    match acuity {
        Some(a) if !(1..=5).contains(&a) => {
            Err(Error::config(key, format!("acuity {a} outside 1–5")))
        }
        _ => Ok(()),
    }
}

fn check_weights<'a>(weights: impl IntoIterator<Item = &'a f64>, key: &str) -> Result<()> {
    let mut total = 0.0;
    for &w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::config(
                key,
                format!("weight {w} must be finite and non-negative"),
            ));
        }
        total += w;
    }
    if total > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, "weights must not all be zero"))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_cases == 0 {
            return Err(Error::config("n_cases", "must be at least 1"));
        }
        let pop = &self.population;
        check_weights(pop.race.values(), "population.race")?;
        check_weights(pop.age.values(), "population.age")?;
        check_weights(pop.gender.values(), "population.gender")?;
        check_weights(pop.insurance.values(), "population.insurance")?;
        check_weights(pop.language.values(), "population.language")?;

        let pr = &self.presentation;
        check_prob(pr.life_saving_prob, "presentation.life_saving_prob")?;
        check_prob(pr.high_risk_prob, "presentation.high_risk_prob")?;
        check_prob(pr.confused_prob, "presentation.confused_prob")?;
        check_prob(pr.severe_pain_prob, "presentation.severe_pain_prob")?;
        check_weights(&pr.resource_weights, "presentation.resource_weights")?;
        pr.heart_rate.validate("presentation.heart_rate")?;
        pr.respiratory_rate
            .validate("presentation.respiratory_rate")?;
        pr.spo2.validate("presentation.spo2")?;
        if pr.spo2.max > 100.0 {
            return Err(Error::config(
                "presentation.spo2.max",
                "oxygen saturation cannot exceed 100",
            ));
        }

        if self.care_pathway.iter().any(|a| a.trim().is_empty()) {
            return Err(Error::config(
                "care_pathway",
                "activity names must be non-empty",
            ));
        }
        check_prob(self.vitals_repeat_prob, "vitals_repeat_prob")?;
        if self.vitals_repeat_prob >= 1.0 {
            return Err(Error::config("vitals_repeat_prob", "must be below 1"));
        }
        check_prob(self.base_waste_redo_prob, "base_waste_redo_prob")?;

        for acuity in 1..=5u8 {
            let Some(d) = self.durations.by_acuity.get(&acuity) else {
                return Err(Error::config(
                    "durations.by_acuity",
                    format!("missing acuity {acuity}"),
                ));
            };
            check_lognormal(
                d.median_minutes,
                d.sigma,
                &format!("durations.by_acuity.{acuity}"),
            )?;
            let Some(w) = self.decisions.get(&acuity) else {
                return Err(Error::config(
                    "decisions",
                    format!("missing acuity {acuity}"),
                ));
            };
            check_weights(w.values(), &format!("decisions.{acuity}"))?;
        }
        for (i, s) in self.durations.steps.iter().enumerate() {
            let key = format!("durations.steps[{i}]");
            check_acuity(s.acuity, &format!("{key}.acuity"))?;
            check_lognormal(s.median_minutes, s.sigma, &key)?;
        }
        self.danger_zone.validate("danger_zone")?;
        self.bias.validate()
    }

    /// Parses and validates a scenario; errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(key, e.into_inner().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn check_lognormal(median: f64, sigma: f64, key: &str) -> Result<()> {
    if median.is_finite() && median > 0.0 && sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            key,
            "median_minutes must be positive and sigma non-negative",
        ))
    }
}
