use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};
use rayon::prelude::*;

use super::esi::{assign_esi, EsiAssignment, PatientPresentation, Vitals};
use super::scenario::{BiasConfig, BiasEntry, Scenario, VitalDistribution};
use crate::error::{Error, Result};
use crate::eventlog::{
    activity, AgeGroup, Attribute, Case, Event, EventLog, Gender, InsuranceGroup, LanguageGroup,
    Provenance, RaceGroup, RawAttributes, INSURANCE_TABLE, LANGUAGE_TABLE, RACE_TABLE,
};
use crate::outcomes::{DecisionGroup, DISPOSITION_TABLE};

/// Case ids count up from here.
pub const FIRST_CASE_ID: u64 = 30_000_000;

const ARRIVAL_WINDOW_SECONDS: i64 = 365 * 24 * 3600;

fn base_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2150, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid base date")
}

/// Weighted choice over the entries of a label → weight map.
struct Choice<T> {
    values: Vec<T>,
    index: WeightedIndex<f64>,
}

impl<T: Copy> Choice<T> {
    fn new(weights: &BTreeMap<T, f64>, key: &str) -> Result<Self> {
        let index = WeightedIndex::new(weights.values().copied())
            .map_err(|e| Error::config(key, e.to_string()))?;
        Ok(Choice {
            values: weights.keys().copied().collect(),
            index,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> T {
        self.values[self.index.sample(rng)]
    }
}

/// Raw strings the generator writes, shared across events.
struct Vocabulary {
    race: HashMap<RaceGroup, Vec<Arc<str>>>,
    insurance: HashMap<InsuranceGroup, Vec<Arc<str>>>,
    language: HashMap<LanguageGroup, Vec<Arc<str>>>,
    disposition: HashMap<DecisionGroup, Vec<Arc<str>>>,
    ages: Vec<Arc<str>>,
    female: Arc<str>,
    male: Arc<str>,
    unknown: Arc<str>,
    enter: Arc<str>,
    triage: Arc<str>,
    discharge: Arc<str>,
    vital: Arc<str>,
    pathway: Vec<Arc<str>>,
}

fn group_strings<G: std::hash::Hash + Eq + Copy>(
    rows: impl Iterator<Item = (&'static str, G)>,
) -> HashMap<G, Vec<Arc<str>>> {
    let mut map: HashMap<G, Vec<Arc<str>>> = HashMap::new();
    for (raw, g) in rows {
        map.entry(g).or_default().push(raw.into());
    }
    map
}

impl Vocabulary {
    fn new(scenario: &Scenario) -> Self {
        Vocabulary {
            race: group_strings(RACE_TABLE.iter().map(|&(raw, _, g)| (raw, g))),
            insurance: group_strings(INSURANCE_TABLE.iter().copied()),
            language: group_strings(LANGUAGE_TABLE.iter().copied()),
            disposition: group_strings(DISPOSITION_TABLE.iter().copied()),
            ages: (0..=120).map(|a: u32| Arc::from(a.to_string())).collect(),
            female: "F".into(),
            male: "M".into(),
            unknown: "U".into(),
            enter: activity::ENTER.into(),
            triage: activity::TRIAGE.into(),
            discharge: activity::DISCHARGE.into(),
            vital: activity::VITAL_SIGN_CHECK.into(),
            pathway: scenario
                .care_pathway
                .iter()
                .map(|a| Arc::from(a.as_str()))
                .collect(),
        }
    }

    fn pick<G: std::hash::Hash + Eq>(
        map: &HashMap<G, Vec<Arc<str>>>,
        g: &G,
        rng: &mut ChaCha8Rng,
    ) -> Arc<str> {
        let options = &map[g];
        options[rng.random_range(0..options.len())].clone()
    }
}

struct Sampler<'a> {
    scenario: &'a Scenario,
    vocab: Vocabulary,
    race: Choice<RaceGroup>,
    age: Choice<AgeGroup>,
    gender: Choice<Gender>,
    insurance: Choice<InsuranceGroup>,
    language: Choice<LanguageGroup>,
    resources: WeightedIndex<f64>,
    decisions: BTreeMap<u8, Choice<DecisionGroup>>,
    shifts: Vec<Option<Choice<DecisionGroup>>>,
}

/// Demographic groups drawn for one synthetic patient.
#[derive(Debug, Clone, Copy)]
struct Groups {
    race: RaceGroup,
    age: AgeGroup,
    gender: Gender,
    insurance: InsuranceGroup,
    language: LanguageGroup,
}

impl Groups {
    fn label(&self, attribute: Attribute) -> &'static str {
        match attribute {
            Attribute::Race => self.race.label(),
            Attribute::AgeGroup => self.age.label(),
            Attribute::Gender => self.gender.label(),
            Attribute::Insurance => self.insurance.label(),
            Attribute::Language => self.language.label(),
        }
    }
}

fn sample_vital(d: &VitalDistribution, rng: &mut ChaCha8Rng) -> f64 {
    let x = if d.sd > 0.0 {
        Normal::new(d.mean, d.sd).expect("validated sd").sample(rng)
    } else {
        d.mean
    };
    x.clamp(d.min, d.max)
}

impl<'a> Sampler<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let pop = &scenario.population;
        let decisions = scenario
            .decisions
            .iter()
            .map(|(&a, w)| Ok((a, Choice::new(w, &format!("decisions.{a}"))?)))
            .collect::<Result<_>>()?;
        let shifts = scenario
            .bias
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.decision_shift
                    .as_ref()
                    .map(|w| Choice::new(w, &format!("bias[{i}].decision_shift")))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        Ok(Sampler {
            scenario,
            vocab: Vocabulary::new(scenario),
            race: Choice::new(&pop.race, "population.race")?,
            age: Choice::new(&pop.age, "population.age")?,
            gender: Choice::new(&pop.gender, "population.gender")?,
            insurance: Choice::new(&pop.insurance, "population.insurance")?,
            language: Choice::new(&pop.language, "population.language")?,
            resources: WeightedIndex::new(scenario.presentation.resource_weights.iter().copied())
                .map_err(|e| {
                Error::config("presentation.resource_weights", e.to_string())
            })?,
            decisions,
            shifts,
        })
    }

    fn presentation(&self, rng: &mut ChaCha8Rng) -> PatientPresentation {
        let m = &self.scenario.presentation;
        let life_saving_needed = rng.random_bool(m.life_saving_prob);
        let high_risk = rng.random_bool(m.high_risk_prob);
        let confused = rng.random_bool(m.confused_prob);
        let severe_pain = if rng.random_bool(m.severe_pain_prob) {
            rng.random_range(7..=10)
        } else {
            rng.random_range(0..=6)
        };
        let expected_resources = self.resources.sample(rng) as u32;
        let vitals = Vitals {
            heart_rate: sample_vital(&m.heart_rate, rng),
            respiratory_rate: sample_vital(&m.respiratory_rate, rng),
            spo2: sample_vital(&m.spo2, rng),
        };
        PatientPresentation {
            life_saving_needed,
            high_risk,
            confused,
            severe_pain,
            expected_resources,
            vitals,
        }
    }

    fn age_years(&self, group: AgeGroup, rng: &mut ChaCha8Rng) -> u32 {
        match group {
            AgeGroup::Until45 => rng.random_range(18..=45),
            AgeGroup::Until65 => rng.random_range(46..=65),
            AgeGroup::Older => rng.random_range(66..=95),
        }
    }

    fn gap_seconds(
        &self,
        from: &str,
        to: &str,
        acuity: u8,
        multiplier: f64,
        rng: &mut ChaCha8Rng,
    ) -> i64 {
        let p = self.scenario.durations.params(from, to, acuity);
        let minutes = if p.sigma > 0.0 {
            LogNormal::new(p.median_minutes.ln(), p.sigma)
                .expect("validated sigma")
                .sample(rng)
        } else {
            p.median_minutes
        };
        ((minutes * multiplier * 60.0).round() as i64).max(1)
    }

    fn case(&self, index: usize, seed: u64) -> Case {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let v = &self.vocab;

        let groups = Groups {
            race: self.race.sample(&mut rng),
            age: self.age.sample(&mut rng),
            gender: self.gender.sample(&mut rng),
            insurance: self.insurance.sample(&mut rng),
            language: self.language.sample(&mut rng),
        };
        let age = self.age_years(groups.age, &mut rng);
        let attributes = RawAttributes {
            race: Some(Vocabulary::pick(&v.race, &groups.race, &mut rng)),
            age: Some(v.ages[age.min(120) as usize].clone()),
            gender: Some(match groups.gender {
                Gender::Female => v.female.clone(),
                Gender::Male => v.male.clone(),
                Gender::Unknown => v.unknown.clone(),
            }),
            insurance: Some(Vocabulary::pick(&v.insurance, &groups.insurance, &mut rng)),
            language: Some(Vocabulary::pick(&v.language, &groups.language, &mut rng)),
            disposition: None,
            acuity: None,
        };

        let EsiAssignment { level: acuity, .. } =
            assign_esi(&self.presentation(&mut rng), &self.scenario.danger_zone);

        let matching: Vec<(usize, &BiasEntry)> = self
            .scenario
            .bias
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.acuity.is_none_or(|a| a == acuity) && groups.label(e.attribute) == e.group
            })
            .collect();
        let multiplier: f64 = matching.iter().map(|(_, e)| e.time_multiplier).product();

        // Activity sequence before waste re-dos.
        let mut activities: Vec<Arc<str>> = vec![v.enter.clone(), v.triage.clone()];
        for step in &v.pathway {
            activities.push(step.clone());
            if **step == *v.vital {
                while rng.random_bool(self.scenario.vitals_repeat_prob) {
                    activities.push(step.clone());
                }
            }
        }
        activities.push(v.discharge.clone());

        let waste_trials = std::iter::once(self.scenario.base_waste_redo_prob)
            .chain(matching.iter().map(|(_, e)| e.extra_waste_redo_prob));
        let mut duplicate_enter = 0;
        let mut duplicate_triage = 0;
        for p in waste_trials.collect::<Vec<_>>() {
            if rng.random_bool(p) {
                if rng.random_bool(0.5) {
                    duplicate_enter += 1;
                } else {
                    duplicate_triage += 1;
                }
            }
        }

        let decision_choice = matching
            .iter()
            .rev()
            .find_map(|(i, _)| self.shifts[*i].as_ref())
            .unwrap_or(&self.decisions[&acuity]);
        let decision = decision_choice.sample(&mut rng);
        let disposition = Vocabulary::pick(&v.disposition, &decision, &mut rng);

        let case_id: Arc<str> = (FIRST_CASE_ID + index as u64).to_string().into();
        let mut at = base_time() + Duration::seconds(rng.random_range(0..ARRIVAL_WINDOW_SECONDS));
        let mut events = Vec::with_capacity(activities.len() + duplicate_enter + duplicate_triage);
        let make = |name: &Arc<str>, at: NaiveDateTime| {
            let mut attrs = attributes.clone();
            if **name == *activity::TRIAGE {
                attrs.acuity = Some(acuity);
            }
            if **name == *activity::DISCHARGE {
                attrs.disposition = Some(disposition.clone());
            }
            Event {
                case_id: case_id.clone(),
                activity: name.clone(),
                timestamp: at,
                attributes: attrs,
                extra: BTreeMap::new(),
            }
        };
        for (i, name) in activities.iter().enumerate() {
            if i > 0 {
                at += Duration::seconds(self.gap_seconds(
                    &activities[i - 1],
                    name,
                    acuity,
                    multiplier,
                    &mut rng,
                ));
            }
            events.push(make(name, at));
            let repeats = if i == 0 {
                duplicate_enter
            } else if i == 1 {
                duplicate_triage
            } else {
                0
            };
            for _ in 0..repeats {
                at += Duration::seconds(rng.random_range(60..=300));
                events.push(make(name, at));
            }
        }
        Case::new(case_id.clone(), events).expect("generated case is well formed")
    }
}

/// Generates `scenario.n_cases` cases. Each case draws from its own RNG
/// stream keyed by `(seed, index)`, so output does not depend on thread count.
pub fn generate_from_scenario(scenario: &Scenario, seed: u64) -> Result<EventLog> {
    let sampler = Sampler::new(scenario)?;
    let cases: Vec<Case> = (0..scenario.n_cases)
        .into_par_iter()
        .map(|i| sampler.case(i, seed))
        .collect();
    let rows = cases.iter().map(|c| c.events.len()).sum();
    EventLog::new(
        cases,
        Provenance {
            source: format!("simulator(seed={seed})"),
            rows_read: rows,
            rows_rejected: 0,
        },
    )
}

/// Default scenario with `n_cases` cases and the given bias.
pub fn generate_log(n_cases: usize, bias: &BiasConfig, seed: u64) -> Result<EventLog> {
    let scenario = Scenario {
        n_cases,
        bias: bias.clone(),
        ..Scenario::default()
    };
    generate_from_scenario(&scenario, seed)
}
