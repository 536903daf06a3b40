use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::effect::EffectBands;
use super::hypothesis::{
    chi_square_independence, cramers_v, epsilon_squared, kruskal_wallis, ContingencyTable,
};
use super::{eligible_groups, is_significant, Attribute, Outcome, StatTestResult};
use crate::error::{Error, Result};
use crate::outcomes::{CaseOutcomes, DecisionGroup};

pub const ACUITY_LEVELS: [u8; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    #[serde(default = "default_min_group_n")]
    pub min_group_n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub effect_bands: EffectBands,
}

fn default_min_group_n() -> usize {
    30
}

fn default_alpha() -> f64 {
    0.05
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            min_group_n: default_min_group_n(),
            alpha: default_alpha(),
            effect_bands: EffectBands::default(),
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_group_n == 0 {
            return Err(Error::config(
                "thresholds.min_group_n",
                "must be at least 1",
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("thresholds.alpha", "must lie in (0, 1)"));
        }
        self.effect_bands.validate()
    }
}

fn continuous_value(outcome: Outcome, o: &CaseOutcomes) -> f64 {
    match outcome {
        Outcome::Time => o.duration_seconds as f64,
        Outcome::Redo => o.redo.waste_pct,
        Outcome::Deviation => o.fitness,
        Outcome::Decision => unreachable!("decision is categorical"),
    }
}

fn run_cell(
    stratum: &[&CaseOutcomes],
    outcome: Outcome,
    attribute: Attribute,
    acuity: u8,
    config: &StatsConfig,
) -> Result<StatTestResult> {
    let mut members: BTreeMap<String, Vec<&CaseOutcomes>> = BTreeMap::new();
    for &o in stratum {
        members
            .entry(o.profile.group_label(attribute).to_string())
            .or_default()
            .push(o);
    }
    let group_sizes: BTreeMap<String, usize> =
        members.iter().map(|(g, m)| (g.clone(), m.len())).collect();
    let eligible = eligible_groups(&group_sizes, config.min_group_n);
    if eligible.len() < 2 {
        return Ok(StatTestResult::not_tested(
            outcome,
            attribute,
            acuity,
            group_sizes,
        ));
    }

    let (test, effect) = if outcome == Outcome::Decision {
        let counts = eligible
            .iter()
            .map(|g| {
                let mut row = vec![0u64; DecisionGroup::ALL.len()];
                for o in &members[*g] {
                    row[o.decision_group as usize] += 1;
                }
                row
            })
            .collect();
        let table = ContingencyTable::new(
            eligible.iter().map(|g| g.to_string()).collect(),
            DecisionGroup::ALL
                .iter()
                .map(|d| d.label().to_string())
                .collect(),
            counts,
        )?;
        // A stratum where every case shares one decision has no association to test.
        let Some((stat, (r, c))) = chi_square_independence(&table) else {
            return Ok(StatTestResult::not_tested(
                outcome,
                attribute,
                acuity,
                group_sizes,
            ));
        };
        (stat, cramers_v(stat.statistic, table.total(), r, c))
    } else {
        let values: Vec<Vec<f64>> = eligible
            .iter()
            .map(|g| {
                members[*g]
                    .iter()
                    .map(|o| continuous_value(outcome, o))
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = values.iter().map(Vec::as_slice).collect();
        let Some(stat) = kruskal_wallis(&refs)? else {
            return Ok(StatTestResult::not_tested(
                outcome,
                attribute,
                acuity,
                group_sizes,
            ));
        };
        let n = values.iter().map(Vec::len).sum();
        (stat, epsilon_squared(stat.statistic, n))
    };

    Ok(StatTestResult {
        outcome,
        attribute,
        acuity,
        test: outcome.test(),
        tested: true,
        statistic: Some(test.statistic),
        df: Some(test.df),
        p_value: Some(test.p_value),
        effect: Some(effect),
        significant: Some(is_significant(test.p_value, config.alpha)),
        interpretation: Some(config.effect_bands.interpret(outcome.effect_kind(), effect)),
        group_sizes,
    })
}

/// Runs every outcome × acuity × attribute cell (100 rows), ordered by
/// outcome, then acuity 1–5, then attribute. Cases without acuity are skipped.
pub fn run_attribute_tests(
    outcomes: &[CaseOutcomes],
    config: &StatsConfig,
) -> Result<Vec<StatTestResult>> {
    config.validate()?;
    let mut strata: BTreeMap<u8, Vec<&CaseOutcomes>> =
        ACUITY_LEVELS.iter().map(|&a| (a, Vec::new())).collect();
    for o in outcomes {
        if let Some(stratum) = o.acuity.and_then(|a| strata.get_mut(&a)) {
            stratum.push(o);
        }
    }
    let cells: Vec<(Outcome, u8, Attribute)> = Outcome::ALL
        .iter()
        .flat_map(|&out| {
            ACUITY_LEVELS
                .iter()
                .flat_map(move |&acu| Attribute::ALL.iter().map(move |&att| (out, acu, att)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(outcome, acuity, attribute)| {
            run_cell(&strata[&acuity], outcome, attribute, acuity, config)
        })
        .collect()
}
