use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{Attribute, EffectKind, Interpretation, Outcome, StatTestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JusticeDimension {
    Distributive,
    Procedural,
    Interactional,
}

impl JusticeDimension {
    pub const ALL: [JusticeDimension; 3] = [
        JusticeDimension::Distributive,
        JusticeDimension::Procedural,
        JusticeDimension::Interactional,
    ];
}

impl fmt::Display for JusticeDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Fixed outcome → dimension mapping. Re-do is the only outcome in two.
pub fn dimensions(outcome: Outcome) -> &'static [JusticeDimension] {
    match outcome {
        Outcome::Decision => &[JusticeDimension::Distributive],
        Outcome::Time | Outcome::Deviation => &[JusticeDimension::Procedural],
        Outcome::Redo => &[
            JusticeDimension::Procedural,
            JusticeDimension::Interactional,
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JusticeConfig {
    /// Attributes whose re-do results count as interaction-related.
    #[serde(default = "default_interactional")]
    pub interactional_attributes: Vec<Attribute>,
    /// Weakest ε² band that makes an attribute a key attribute.
    #[serde(default = "default_epsilon_floor")]
    pub epsilon_squared_floor: Interpretation,
    /// Weakest Cramér's V band that makes an attribute a key attribute.
    #[serde(default = "default_v_floor")]
    pub cramers_v_floor: Interpretation,
}

fn default_interactional() -> Vec<Attribute> {
    vec![Attribute::Language]
}

fn default_epsilon_floor() -> Interpretation {
    Interpretation::Small
}

// Table-derived V bands start at Small, so "one band above the bottom" is Medium.
fn default_v_floor() -> Interpretation {
    Interpretation::Medium
}

impl Default for JusticeConfig {
    fn default() -> Self {
        JusticeConfig {
            interactional_attributes: default_interactional(),
            epsilon_squared_floor: default_epsilon_floor(),
            cramers_v_floor: default_v_floor(),
        }
    }
}

impl JusticeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interactional_attributes.is_empty() {
            return Err(Error::config(
                "justice.interactional_attributes",
                "at least one attribute is required",
            ));
        }
        Ok(())
    }

    fn floor(&self, kind: EffectKind) -> Interpretation {
        match kind {
            EffectKind::EpsilonSquared => self.epsilon_squared_floor,
            EffectKind::CramersV => self.cramers_v_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JusticeEntry {
    pub justice: JusticeDimension,
    pub outcome: Outcome,
    pub acuity_levels: BTreeSet<u8>,
    pub key_attributes: BTreeSet<Attribute>,
    /// Weakest and strongest band among the qualifying results.
    pub effect_range: (Interpretation, Interpretation),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JusticeSummary {
    pub entries: Vec<JusticeEntry>,
}

impl JusticeSummary {
    pub fn for_dimension(&self, justice: JusticeDimension) -> impl Iterator<Item = &JusticeEntry> {
        self.entries.iter().filter(move |e| e.justice == justice)
    }
}

/// Groups significant results at or above the effect floor by dimension and
/// outcome. Cells with no qualifying result are omitted.
pub fn map_to_justice(results: &[StatTestResult], config: &JusticeConfig) -> JusticeSummary {
    let mut entries = Vec::new();
    for justice in JusticeDimension::ALL {
        for outcome in Outcome::ALL {
            if !dimensions(outcome).contains(&justice) {
                continue;
            }
            let floor = config.floor(outcome.effect_kind());
            let qualifying: Vec<(&StatTestResult, Interpretation)> = results
                .iter()
                .filter(|r| r.outcome == outcome && r.tested && r.significant == Some(true))
                .filter(|r| {
                    justice != JusticeDimension::Interactional
                        || config.interactional_attributes.contains(&r.attribute)
                })
                .filter_map(|r| r.interpretation.filter(|&i| i >= floor).map(|i| (r, i)))
                .collect();
            let (Some(lo), Some(hi)) = (
                qualifying.iter().map(|q| q.1).min(),
                qualifying.iter().map(|q| q.1).max(),
            ) else {
                continue;
            };
            entries.push(JusticeEntry {
                justice,
                outcome,
                acuity_levels: qualifying.iter().map(|q| q.0.acuity).collect(),
                key_attributes: qualifying.iter().map(|q| q.0.attribute).collect(),
                effect_range: (lo, hi),
            });
        }
    }
    JusticeSummary { entries }
}

/// `1-3, 5` style rendering of a level set.
pub fn format_levels(levels: &BTreeSet<u8>) -> String {
    let mut parts = Vec::new();
    let mut iter = levels.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().unwrap_or(end);
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
    }
    parts.join(", ")
}

/// One line per dimension for terminal output.
pub fn summary_lines(summary: &JusticeSummary) -> Vec<String> {
    JusticeDimension::ALL
        .iter()
        .map(|&justice| {
            let parts: Vec<String> = summary
                .for_dimension(justice)
                .map(|e| {
                    let attrs: Vec<&str> =
                        e.key_attributes.iter().map(|a| a.display_name()).collect();
                    let (lo, hi) = e.effect_range;
                    let range = if lo == hi {
                        lo.label().to_string()
                    } else {
                        format!("{}-{}", lo.label(), hi.label().to_lowercase())
                    };
                    format!(
                        "{} at acuity {} ({}; {})",
                        e.outcome.display_name(),
                        format_levels(&e.acuity_levels),
                        attrs.join(", "),
                        range
                    )
                })
                .collect();
            if parts.is_empty() {
                format!("{justice}: no significant findings above the effect floor")
            } else {
                format!("{justice}: {}", parts.join("; "))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn result(
        outcome: Outcome,
        acuity: u8,
        attribute: Attribute,
        p: f64,
        interp: Interpretation,
    ) -> StatTestResult {
        StatTestResult {
            outcome,
            attribute,
            acuity,
            test: outcome.test(),
            tested: true,
            statistic: Some(1.0),
            df: Some(1),
            p_value: Some(p),
            effect: Some(0.0),
            significant: Some(p < 0.05),
            interpretation: Some(interp),
            group_sizes: BTreeMap::new(),
        }
    }

    #[test]
    fn mapping_is_total() {
        for o in Outcome::ALL {
            assert!(!dimensions(o).is_empty());
        }
        assert_eq!(dimensions(Outcome::Redo).len(), 2);
    }

    #[test]
    fn empty_when_nothing_significant() {
        let results = vec![result(
            Outcome::Time,
            1,
            Attribute::Race,
            0.5,
            Interpretation::Large,
        )];
        assert!(map_to_justice(&results, &JusticeConfig::default())
            .entries
            .is_empty());
    }

    #[test]
    fn language_redo_is_interactional() {
        let results: Vec<_> = (1..=3)
            .flat_map(|a| {
                [
                    result(
                        Outcome::Redo,
                        a,
                        Attribute::Language,
                        0.0001,
                        Interpretation::Small,
                    ),
                    result(
                        Outcome::Redo,
                        a,
                        Attribute::Insurance,
                        0.0001,
                        Interpretation::Small,
                    ),
                ]
            })
            .collect();
        let s = map_to_justice(&results, &JusticeConfig::default());
        assert_eq!(s.entries.len(), 2);
        let procedural = s
            .for_dimension(JusticeDimension::Procedural)
            .next()
            .unwrap();
        assert_eq!(
            procedural.key_attributes,
            [Attribute::Insurance, Attribute::Language].into()
        );
        let inter = s
            .for_dimension(JusticeDimension::Interactional)
            .next()
            .unwrap();
        assert_eq!(inter.key_attributes, [Attribute::Language].into());
        assert_eq!(inter.acuity_levels, [1, 2, 3].into());
    }

    #[test]
    fn negligible_effects_do_not_qualify() {
        let results = vec![result(
            Outcome::Time,
            2,
            Attribute::Race,
            0.0001,
            Interpretation::Negligible,
        )];
        assert!(map_to_justice(&results, &JusticeConfig::default())
            .entries
            .is_empty());
    }

    #[test]
    fn level_formatting() {
        assert_eq!(format_levels(&[1, 2, 3, 5].into()), "1-3, 5");
        assert_eq!(format_levels(&[4].into()), "4");
    }
}
