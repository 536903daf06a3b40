use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interpretation {
    Negligible,
    Small,
    Medium,
    Large,
    VeryLarge,
}

impl Interpretation {
    pub fn label(self) -> &'static str {
        match self {
            Interpretation::Negligible => "Negligible",
            Interpretation::Small => "Small",
            Interpretation::Medium => "Medium",
            Interpretation::Large => "Large",
            Interpretation::VeryLarge => "Very large",
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectKind {
    EpsilonSquared,
    CramersV,
}

/// How Cramér's V cut points map to labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CramersVConvention {
    /// `[0, c0)` Small, `[c0, c1)` Medium, `[c1, c2)` Large, `[c2, ∞)` Very large.
    /// Matches how published V tables label their rows.
    #[default]
    TableDerived,
    /// Cut points read as lower bounds: below `c0` Negligible, `[c0, c1)` Small,
    /// `[c1, c2)` Medium, exactly `c2` Large, above `c2` Very large.
    ProseAnchors,
}

/// Band edges for both effect-size measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectBands {
    /// Lower edges of Small, Medium, Large for ε².
    #[serde(default = "default_epsilon")]
    pub epsilon_squared: [f64; 3],
    #[serde(default = "default_cramers_v")]
    pub cramers_v: [f64; 3],
    #[serde(default)]
    pub cramers_v_convention: CramersVConvention,
}

fn default_epsilon() -> [f64; 3] {
    [0.01, 0.06, 0.14]
}

fn default_cramers_v() -> [f64; 3] {
    [0.1, 0.3, 0.5]
}

impl Default for EffectBands {
    fn default() -> Self {
        EffectBands {
            epsilon_squared: default_epsilon(),
            cramers_v: default_cramers_v(),
            cramers_v_convention: CramersVConvention::TableDerived,
        }
    }
}

impl EffectBands {
    pub fn validate(&self) -> Result<()> {
        for (key, edges) in [
            (
                "thresholds.effect_bands.epsilon_squared",
                self.epsilon_squared,
            ),
            ("thresholds.effect_bands.cramers_v", self.cramers_v),
        ] {
            let ordered = edges[0] > 0.0 && edges[0] < edges[1] && edges[1] < edges[2];
            if !ordered || edges.iter().any(|e| !e.is_finite()) {
                return Err(Error::config(
                    key,
                    "band edges must be positive and strictly increasing",
                ));
            }
        }
        Ok(())
    }

    pub fn interpret(&self, kind: EffectKind, value: f64) -> Interpretation {
        use Interpretation::*;
        match kind {
            EffectKind::EpsilonSquared => {
                let [s, m, l] = self.epsilon_squared;
                if value < s {
                    Negligible
                } else if value < m {
                    Small
                } else if value < l {
                    Medium
                } else {
                    Large
                }
            }
            EffectKind::CramersV => {
                let [a, b, c] = self.cramers_v;
                match self.cramers_v_convention {
                    CramersVConvention::TableDerived => {
                        if value < a {
                            Small
                        } else if value < b {
                            Medium
                        } else if value < c {
                            Large
                        } else {
                            VeryLarge
                        }
                    }
                    CramersVConvention::ProseAnchors => {
                        if value < a {
                            Negligible
                        } else if value < b {
                            Small
                        } else if value < c {
                            Medium
                        } else if value == c {
                            Large
                        } else {
                            VeryLarge
                        }
                    }
                }
            }
        }
    }

    /// Same bands with the other Cramér's V convention.
    pub fn with_convention(self, convention: CramersVConvention) -> Self {
        EffectBands {
            cramers_v_convention: convention,
            ..self
        }
    }
}

/// Interprets an effect size with the default bands.
pub fn interpret_effect(kind: EffectKind, value: f64) -> Interpretation {
    EffectBands::default().interpret(kind, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EffectKind::*;
    use Interpretation::*;

    #[test]
    fn epsilon_bands() {
        assert_eq!(interpret_effect(EpsilonSquared, 0.0), Negligible);
        assert_eq!(interpret_effect(EpsilonSquared, 0.0099), Negligible);
        assert_eq!(interpret_effect(EpsilonSquared, 0.01), Small);
        assert_eq!(interpret_effect(EpsilonSquared, 0.0285), Small);
        assert_eq!(interpret_effect(EpsilonSquared, 0.05), Small);
        assert_eq!(interpret_effect(EpsilonSquared, 0.1375), Medium);
        assert_eq!(interpret_effect(EpsilonSquared, 0.1554), Large);
    }

    #[test]
    fn cramers_v_table_bands() {
        assert_eq!(interpret_effect(CramersV, 0.049), Small);
        assert_eq!(interpret_effect(CramersV, 0.29), Medium);
        assert_eq!(interpret_effect(CramersV, 0.37), Large);
        assert_eq!(interpret_effect(CramersV, 0.5012), VeryLarge);
        assert_eq!(interpret_effect(CramersV, 0.5024), VeryLarge);
    }

    #[test]
    fn cramers_v_prose_bands_disagree_where_expected() {
        let prose = EffectBands::default().with_convention(CramersVConvention::ProseAnchors);
        assert_eq!(prose.interpret(CramersV, 0.049), Negligible);
        assert_eq!(prose.interpret(CramersV, 0.29), Small);
        assert_eq!(prose.interpret(CramersV, 0.37), Medium);
        assert_eq!(prose.interpret(CramersV, 0.5), Large);
        assert_eq!(prose.interpret(CramersV, 0.5024), VeryLarge);
    }

    #[test]
    fn validation() {
        assert!(EffectBands::default().validate().is_ok());
        let bad = EffectBands {
            epsilon_squared: [0.1, 0.06, 0.14],
            ..EffectBands::default()
        };
        assert!(bad.validate().is_err());
    }
}
