//! Group-difference testing stratified by acuity.
//!
//! Continuous outcomes (time, re-do, deviation) use Kruskal–Wallis with ε²;
//! the categorical decision outcome uses a χ² independence test with
//! Cramér's V. Effect sizes are banded into interpretation labels.

mod distribution;
mod effect;
mod grid;
mod hypothesis;
mod rank;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use distribution::{chi2_upper_tail, ln_gamma, regularized_gamma_q};
pub use effect::{interpret_effect, CramersVConvention, EffectBands, EffectKind, Interpretation};
pub use grid::{run_attribute_tests, StatsConfig};
pub use hypothesis::{
    chi_square_independence, cramers_v, epsilon_squared, kruskal_wallis, ContingencyTable,
    TestStatistic,
};
pub use rank::{rank_with_ties, Ranking};

pub use crate::eventlog::Attribute;

/// The four business-process outcomes measured per case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Time,
    Redo,
    Deviation,
    Decision,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Time,
        Outcome::Redo,
        Outcome::Deviation,
        Outcome::Decision,
    ];

    pub fn test(self) -> TestKind {
        match self {
            Outcome::Decision => TestKind::ChiSquare,
            _ => TestKind::KruskalWallis,
        }
    }

    pub fn effect_kind(self) -> EffectKind {
        match self.test() {
            TestKind::ChiSquare => EffectKind::CramersV,
            TestKind::KruskalWallis => EffectKind::EpsilonSquared,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Outcome::Time => "Time",
            Outcome::Redo => "Re-do",
            Outcome::Deviation => "Deviation",
            Outcome::Decision => "Decision",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    KruskalWallis,
    ChiSquare,
}

/// One cell of the acuity × attribute × outcome grid.
///
/// When `tested` is false every statistic field is `None`; `group_sizes`
/// is always filled and lists every group observed in the stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub outcome: Outcome,
    pub attribute: Attribute,
    pub acuity: u8,
    pub test: TestKind,
    pub tested: bool,
    pub statistic: Option<f64>,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
    pub effect: Option<f64>,
    pub significant: Option<bool>,
    pub interpretation: Option<Interpretation>,
    pub group_sizes: BTreeMap<String, usize>,
}

impl StatTestResult {
    pub fn not_tested(
        outcome: Outcome,
        attribute: Attribute,
        acuity: u8,
        group_sizes: BTreeMap<String, usize>,
    ) -> Self {
        StatTestResult {
            outcome,
            attribute,
            acuity,
            test: outcome.test(),
            tested: false,
            statistic: None,
            df: None,
            p_value: None,
            effect: None,
            significant: None,
            interpretation: None,
            group_sizes,
        }
    }

    pub fn interpretation_label(&self) -> &'static str {
        self.interpretation
            .map_or("Not tested", Interpretation::label)
    }
}

/// `p < alpha`.
pub fn is_significant(p_value: f64, alpha: f64) -> bool {
    p_value < alpha
}

/// Renders p-values the way published tables do: `<0.001` below that, else three decimals.
pub fn format_p_value(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// Groups with at least `min_n` members. Fewer than two survivors means the
/// cell is not tested.
pub fn eligible_groups(group_sizes: &BTreeMap<String, usize>, min_n: usize) -> Vec<&str> {
    group_sizes
        .iter()
        .filter(|(_, &n)| n >= min_n)
        .map(|(g, _)| g.as_str())
        .collect()
}
