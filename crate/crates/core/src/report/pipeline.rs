use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::justice::{map_to_justice, summary_lines, JusticeConfig, JusticeSummary};
use super::render::{render_csv, render_json, render_report, ReportContext, ReportFormat};
use crate::discovery::{
    count_directly_follows, mine_dependency_graph, to_process_net, ProcessNet,
    DEFAULT_DEPENDENCY_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::eventlog::{
    filter_for_analysis, impute_case_attributes, load_log_path, map_log_demographics,
    write_log_path, AgeBands, ColumnMap, CsvOptions, EventLog, FilterReport, ImputationReport,
    MappingReport,
};
use crate::outcomes::{
    extract_outcomes, write_outcomes_path, CaseOutcomes, OutcomeReport,
    DEFAULT_GAP_THRESHOLD_MINUTES,
};
use crate::stats::{run_attribute_tests, EffectBands, StatTestResult, StatsConfig};
use crate::triage_sim::{generate_from_scenario, DangerZone, Scenario};

/// Where the event log comes from. Exactly one field must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// CSV event log.
    #[serde(default)]
    pub log: Option<PathBuf>,
    /// Scenario JSON file for the simulator.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    /// Scenario given inline.
    #[serde(default)]
    pub scenario_config: Option<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_min_group_n")]
    pub min_group_n: usize,
    #[serde(default = "default_gap")]
    pub gap_threshold_minutes: i64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub age_bands: AgeBands,
    /// Vital-sign cutoffs used when simulating.
    #[serde(default)]
    pub danger_zone: DangerZone,
    #[serde(default)]
    pub effect_bands: EffectBands,
}

fn default_tau() -> f64 {
    DEFAULT_DEPENDENCY_THRESHOLD
}
fn default_min_group_n() -> usize {
    StatsConfig::default().min_group_n
}
fn default_gap() -> i64 {
    DEFAULT_GAP_THRESHOLD_MINUTES
}
fn default_alpha() -> f64 {
    StatsConfig::default().alpha
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau: default_tau(),
            min_group_n: default_min_group_n(),
            gap_threshold_minutes: default_gap(),
            alpha: default_alpha(),
            age_bands: AgeBands::default(),
            danger_zone: DangerZone::default(),
            effect_bands: EffectBands::default(),
        }
    }
}

impl Thresholds {
    pub fn stats(&self) -> StatsConfig {
        StatsConfig {
            min_group_n: self.min_group_n,
            alpha: self.alpha,
            effect_bands: self.effect_bands,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::config("thresholds.tau", "must lie in [0, 1]"));
        }
        if self.gap_threshold_minutes < 0 {
            return Err(Error::config(
                "thresholds.gap_threshold_minutes",
                "must be non-negative",
            ));
        }
        self.age_bands.validate()?;
        self.danger_zone.validate("thresholds.danger_zone")?;
        self.stats().validate()
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fairlens-out")
}

/// The single JSON document driving `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub column_map: ColumnMap,
    #[serde(default)]
    pub csv: CsvOptions,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub justice: JusticeConfig,
}

impl PipelineConfig {
    /// Parses and validates. Errors carry the dotted key of the bad setting.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut key = e.path().to_string();
            let message = e.into_inner().to_string();
            // Name the missing field itself, not just its parent.
            if let Some(field) = message
                .strip_prefix("missing field `")
                .and_then(|rest| rest.split('`').next())
            {
                key = if key == "." || key.is_empty() {
                    field.to_string()
                } else {
                    format!("{key}.{field}")
                };
            }
            Error::config(key, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.input.log.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.input.scenario.as_mut() {
            resolve(p);
        }
        resolve(&mut config.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let set = [
            self.input.log.is_some(),
            self.input.scenario.is_some(),
            self.input.scenario_config.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if set != 1 {
            return Err(Error::config(
                "input",
                "set exactly one of input.log, input.scenario, input.scenario_config",
            ));
        }
        if let Some(s) = &self.input.scenario_config {
            s.validate()?;
        }
        self.thresholds.validate()?;
        self.justice.validate()
    }
}

/// Everything computed from a prepared log.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub net: ProcessNet,
    pub outcomes: Vec<CaseOutcomes>,
    pub outcome_report: OutcomeReport,
    pub results: Vec<StatTestResult>,
    pub justice: JusticeSummary,
}

/// Stage counters, returned for display and tests.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub source: String,
    pub cases_loaded: usize,
    pub events_loaded: usize,
    pub rows_rejected_at_load: usize,
    pub imputation: ImputationReport,
    pub mapping: MappingReport,
    pub filter: FilterReport,
    pub outcome_report: OutcomeReport,
    pub cases_analyzed: usize,
    pub tested_cells: usize,
    pub significant_cells: usize,
    pub justice_lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

/// Impute, map and filter a loaded log.
pub fn prepare_log(
    log: EventLog,
    bands: &AgeBands,
) -> (EventLog, ImputationReport, MappingReport, FilterReport) {
    let (log, imputation) = impute_case_attributes(log);
    let (log, mapping) = map_log_demographics(log, bands);
    let (log, filter) = filter_for_analysis(log);
    (log, imputation, mapping, filter)
}

/// Discover, replay, extract, test and map to justice dimensions.
pub fn analyze(
    log: &EventLog,
    thresholds: &Thresholds,
    justice: &JusticeConfig,
) -> Result<Analysis> {
    if log.cases.is_empty() {
        return Err(Error::EmptyInput {
            rejected: log.provenance.rows_rejected,
        });
    }
    let df = count_directly_follows(log);
    let graph = mine_dependency_graph(&df, thresholds.tau)?;
    let net = to_process_net(&graph)?;
    let (outcomes, outcome_report) = extract_outcomes(log, &net, thresholds.gap_threshold_minutes)?;
    let results = run_attribute_tests(&outcomes, &thresholds.stats())?;
    let justice = map_to_justice(&results, justice);
    Ok(Analysis {
        net,
        outcomes,
        outcome_report,
        results,
        justice,
    })
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the whole pipeline and writes its artifacts into `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut artifacts = Vec::new();

    let scenario = match (&config.input.scenario, &config.input.scenario_config) {
        (Some(path), _) => Some(Scenario::from_path(path)?),
        (None, Some(s)) => Some(s.clone()),
        (None, None) => None,
    };
    let log = match (&config.input.log, scenario) {
        (Some(path), _) => load_log_path(path, &config.column_map, &config.csv)?,
        (None, Some(mut scenario)) => {
            scenario.danger_zone = config.thresholds.danger_zone;
            let log = generate_from_scenario(&scenario, config.seed)?;
            let path = out.join("log.csv");
            write_log_path(&log, &path, &config.column_map, &config.csv)?;
            artifacts.push(path);
            log
        }
        (None, None) => unreachable!("validated input"),
    };

    let mut summary = PipelineSummary {
        source: log.provenance.source.clone(),
        cases_loaded: log.cases.len(),
        events_loaded: log.event_count(),
        rows_rejected_at_load: log.provenance.rows_rejected,
        ..PipelineSummary::default()
    };
    let (log, imputation, mapping, filter) = prepare_log(log, &config.thresholds.age_bands);
    summary.imputation = imputation;
    summary.mapping = mapping;
    summary.filter = filter;
    summary.cases_analyzed = log.cases.len();

    let analysis = analyze(&log, &config.thresholds, &config.justice)?;
    summary.outcome_report = analysis.outcome_report;
    summary.tested_cells = analysis.results.iter().filter(|r| r.tested).count();
    summary.significant_cells = analysis
        .results
        .iter()
        .filter(|r| r.significant == Some(true))
        .count();
    summary.justice_lines = summary_lines(&analysis.justice);

    let net_path = out.join("net.json");
    write_text(&net_path, &(analysis.net.to_json()? + "\n"))?;
    let dot_path = out.join("net.dot");
    write_text(&dot_path, &analysis.net.to_dot())?;
    let outcomes_path = out.join("outcomes.csv");
    write_outcomes_path(&outcomes_path, &analysis.outcomes)?;
    let results_csv = out.join("results.csv");
    write_text(&results_csv, &render_csv(&analysis.results)?)?;
    let results_json = out.join("results.json");
    write_text(
        &results_json,
        &render_json(&analysis.results, &analysis.justice)?,
    )?;

    let mut fitness: Vec<f64> = analysis.outcomes.iter().map(|o| o.fitness).collect();
    let context = ReportContext {
        notes: vec![
            format!("Source: {}", summary.source),
            format!(
                "Cases analysed: {} of {} loaded ({} events, {} rows rejected at load)",
                summary.cases_analyzed, summary.cases_loaded, summary.events_loaded, summary.rows_rejected_at_load
            ),
            format!(
                "Removed before analysis: {} cases with an excluded race category, {} with an invalid age",
                summary.filter.removed_cases, summary.mapping.invalid_cases
            ),
            format!(
                "Reference net: {} transitions, {} places (dependency threshold {})",
                analysis.net.transitions().len(),
                analysis.net.places().len(),
                config.thresholds.tau
            ),
            format!(
                "Median replay fitness: {:.4}",
                median(&mut fitness).unwrap_or(f64::NAN)
            ),
            format!(
                "Groups smaller than {} are excluded from each test; significance at p < {}",
                config.thresholds.min_group_n, config.thresholds.alpha
            ),
        ],
    };
    let report = render_report(
        &analysis.results,
        &analysis.justice,
        &config.thresholds.effect_bands,
        &context,
        config.format,
    )?;
    let report_path = out.join(format!("report.{}", config.format.extension()));
    write_text(&report_path, &report)?;

    artifacts.extend([
        net_path,
        dot_path,
        outcomes_path,
        results_csv,
        results_json,
        report_path,
    ]);
    summary.artifacts = artifacts;
    Ok(summary)
}
