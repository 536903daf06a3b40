use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::justice::{format_levels, JusticeSummary};
use crate::error::{Error, Result};
use crate::stats::{
    format_p_value, CramersVConvention, EffectBands, EffectKind, Outcome, StatTestResult,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Md,
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Md => "md",
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(ReportFormat::Md),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Machine-readable report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub results: Vec<StatTestResult>,
    pub justice: JusticeSummary,
}

/// Context lines printed above the markdown tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportContext {
    pub notes: Vec<String>,
}

pub fn render_report(
    results: &[StatTestResult],
    summary: &JusticeSummary,
    bands: &EffectBands,
    context: &ReportContext,
    format: ReportFormat,
) -> Result<String> {
    match format {
        ReportFormat::Json => render_json(results, summary),
        ReportFormat::Csv => render_csv(results),
        ReportFormat::Md => Ok(render_markdown(results, summary, bands, context)),
    }
}

pub fn render_json(results: &[StatTestResult], summary: &JusticeSummary) -> Result<String> {
    let doc = ReportDocument {
        results: results.to_vec(),
        justice: summary.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn parse_json_report(text: &str) -> Result<ReportDocument> {
    Ok(serde_json::from_str(text)?)
}

pub const CSV_HEADER: [&str; 12] = [
    "outcome",
    "acuity",
    "attribute",
    "test",
    "tested",
    "statistic",
    "df",
    "p_value",
    "effect",
    "significant",
    "interpretation",
    "group_sizes",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per grid cell. `group_sizes` is `group=n` pairs joined by `;`.
pub fn render_csv(results: &[StatTestResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in results {
        let sizes: Vec<String> = r
            .group_sizes
            .iter()
            .map(|(g, n)| format!("{g}={n}"))
            .collect();
        w.write_record([
            format!("{:?}", r.outcome),
            r.acuity.to_string(),
            format!("{:?}", r.attribute),
            format!("{:?}", r.test),
            r.tested.to_string(),
            opt(r.statistic),
            opt(r.df),
            opt(r.p_value),
            opt(r.effect),
            opt(r.significant),
            r.interpretation_label().to_string(),
            sizes.join(";"),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<results csv>", e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(e.to_string()))
}

fn effect_heading(outcome: Outcome) -> &'static str {
    match outcome.effect_kind() {
        EffectKind::EpsilonSquared => "ε²",
        EffectKind::CramersV => "Cramér's V",
    }
}

fn interpretation_cell(r: &StatTestResult, bands: &EffectBands) -> String {
    let label = r.interpretation_label().to_string();
    let (Some(effect), Some(primary)) = (r.effect, r.interpretation) else {
        return label;
    };
    if r.outcome.effect_kind() != EffectKind::CramersV {
        return label;
    }
    let other_convention = match bands.cramers_v_convention {
        CramersVConvention::TableDerived => CramersVConvention::ProseAnchors,
        CramersVConvention::ProseAnchors => CramersVConvention::TableDerived,
    };
    let other = bands
        .with_convention(other_convention)
        .interpret(EffectKind::CramersV, effect);
    if other == primary {
        label
    } else {
        let name = match other_convention {
            CramersVConvention::TableDerived => "table bands",
            CramersVConvention::ProseAnchors => "anchor bands",
        };
        format!("{label} ({name}: {})", other.label())
    }
}

fn yes_no(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "Yes",
        Some(false) => "No",
        None => "--",
    }
}

pub fn render_markdown(
    results: &[StatTestResult],
    summary: &JusticeSummary,
    bands: &EffectBands,
    context: &ReportContext,
) -> String {
    let mut out = String::from("# Triage fairness report\n\n");
    for note in &context.notes {
        let _ = writeln!(out, "- {note}");
    }
    if !context.notes.is_empty() {
        out.push('\n');
    }

    for outcome in Outcome::ALL {
        let test = match outcome.effect_kind() {
            EffectKind::EpsilonSquared => "Kruskal-Wallis",
            EffectKind::CramersV => "Chi-square",
        };
        let _ = writeln!(out, "## {} ({test})\n", outcome.display_name());
        let _ = writeln!(
            out,
            "| Acuity | Attribute | p-value | {} | Significant | Interpretation |",
            effect_heading(outcome)
        );
        out.push_str("|---|---|---|---|---|---|\n");
        for r in results.iter().filter(|r| r.outcome == outcome) {
            let (p, effect) = if r.tested {
                (
                    r.p_value.map(format_p_value).unwrap_or_default(),
                    r.effect.map(|e| format!("{e:.4}")).unwrap_or_default(),
                )
            } else {
                ("--".to_string(), "--".to_string())
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                r.acuity,
                r.attribute.display_name(),
                p,
                effect,
                yes_no(r.significant),
                interpretation_cell(r, bands)
            );
        }
        out.push('\n');
    }

    out.push_str("## Justice summary\n\n");
    if summary.entries.is_empty() {
        out.push_str("No significant differences above the effect floor.\n");
        return out;
    }
    out.push_str("| Justice type | Outcome | Acuity level(s) | Key attributes | Effect size |\n");
    out.push_str("|---|---|---|---|---|\n");
    for e in &summary.entries {
        let attrs: Vec<&str> = e.key_attributes.iter().map(|a| a.display_name()).collect();
        let (lo, hi) = e.effect_range;
        let range = if lo == hi {
            lo.label().to_string()
        } else {
            format!("{}-{}", lo.label(), hi.label().to_lowercase())
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            e.justice,
            e.outcome.display_name(),
            format_levels(&e.acuity_levels),
            attrs.join(", "),
            range
        );
    }
    out
}
