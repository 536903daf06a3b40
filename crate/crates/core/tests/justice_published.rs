//! Feeds the published per-cell results through the justice mapping.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use fairlens_core::report::{map_to_justice, JusticeConfig, JusticeDimension, JusticeEntry};
use fairlens_core::stats::{
    Attribute, EffectBands, EffectKind, Interpretation, Outcome, StatTestResult,
};

fn published() -> Vec<StatTestResult> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/published_cells.csv");
    let mut reader = csv::Reader::from_path(path).unwrap();
    let bands = EffectBands::default();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let outcome = match &r[0] {
                "Time" => Outcome::Time,
                "Redo" => Outcome::Redo,
                "Deviation" => Outcome::Deviation,
                _ => Outcome::Decision,
            };
            let attribute = match &r[2] {
                "Race" => Attribute::Race,
                "AgeGroup" => Attribute::AgeGroup,
                "Gender" => Attribute::Gender,
                "Insurance" => Attribute::Insurance,
                _ => Attribute::Language,
            };
            let acuity: u8 = r[1].parse().unwrap();
            if r[3].is_empty() {
                return StatTestResult::not_tested(outcome, attribute, acuity, BTreeMap::new());
            }
            let p: f64 = r[3].parse().unwrap();
            let effect: f64 = r[4].parse().unwrap();
            let kind = match outcome {
                Outcome::Decision => EffectKind::CramersV,
                _ => EffectKind::EpsilonSquared,
            };
            StatTestResult {
                outcome,
                attribute,
                acuity,
                test: outcome.test(),
                tested: true,
                statistic: None,
                df: None,
                p_value: Some(p),
                effect: Some(effect),
                significant: Some(p < 0.05),
                interpretation: Some(bands.interpret(kind, effect)),
                group_sizes: BTreeMap::new(),
            }
        })
        .collect()
}

fn entry(dimension: JusticeDimension, outcome: Outcome) -> JusticeEntry {
    let summary = map_to_justice(&published(), &JusticeConfig::default());
    let found = summary
        .for_dimension(dimension)
        .find(|e| e.outcome == outcome)
        .cloned();
    found.unwrap_or_else(|| panic!("{dimension} {outcome:?} missing"))
}

fn levels(v: &[u8]) -> BTreeSet<u8> {
    v.iter().copied().collect()
}

#[test]
fn distributive_row_matches() {
    let e = entry(JusticeDimension::Distributive, Outcome::Decision);
    assert_eq!(e.acuity_levels, levels(&[1, 2, 3, 4, 5]));
    assert_eq!(
        e.key_attributes,
        [
            Attribute::AgeGroup,
            Attribute::Insurance,
            Attribute::Language
        ]
        .into()
    );
    assert_eq!(
        e.effect_range,
        (Interpretation::Medium, Interpretation::VeryLarge)
    );
}

#[test]
fn procedural_time_and_redo_locate_the_same_cells() {
    let time = entry(JusticeDimension::Procedural, Outcome::Time);
    assert_eq!(time.acuity_levels, levels(&[4, 5]));
    assert_eq!(time.key_attributes, [Attribute::AgeGroup].into());

    let redo = entry(JusticeDimension::Procedural, Outcome::Redo);
    assert_eq!(redo.acuity_levels, levels(&[1, 2, 3]));
    assert_eq!(
        redo.key_attributes,
        [Attribute::Insurance, Attribute::Language].into()
    );

    let inter = entry(JusticeDimension::Interactional, Outcome::Redo);
    assert_eq!(inter.acuity_levels, levels(&[1, 2, 3]));
    assert_eq!(inter.key_attributes, [Attribute::Language].into());
}

#[test]
fn deviation_covers_the_published_attributes() {
    let e = entry(JusticeDimension::Procedural, Outcome::Deviation);
    assert_eq!(e.acuity_levels, levels(&[1, 2, 3, 4, 5]));
    for a in [
        Attribute::AgeGroup,
        Attribute::Insurance,
        Attribute::Language,
    ] {
        assert!(e.key_attributes.contains(&a));
    }
    assert_eq!(
        e.effect_range,
        (Interpretation::Small, Interpretation::Large)
    );
}
