//! ESI triage logic and a synthetic ED event-log generator.
//!
//! The generator samples a patient presentation, assigns an acuity with
//! [`assign_esi`], and emits an `Enter → Triage → care pathway → Discharge`
//! case. [`BiasConfig`] entries distort durations, re-do counts or discharge
//! decisions for chosen demographic groups, giving a known ground truth for
//! the disparity tests.

mod esi;
mod generate;
mod scenario;

pub use esi::{assign_esi, DangerZone, EsiAssignment, PatientPresentation, Vitals};
pub use generate::{generate_from_scenario, generate_log, FIRST_CASE_ID};
pub use scenario::{
    BiasConfig, BiasEntry, DurationModel, LogNormalMinutes, Population, PresentationModel,
    Scenario, StepDuration, VitalDistribution,
};
