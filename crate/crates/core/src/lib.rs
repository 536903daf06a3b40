//! Fairness analytics for emergency-department triage processes.
//!
//! The crate turns an ED event log into four per-case process outcomes
//! (time, re-do, deviation, decision), tests them for disparities across
//! sensitive attributes within each acuity level, and groups the findings by
//! organizational-justice dimension.
//!
//! Pipeline stages, in order:
//!
//! 1. [`eventlog`]: CSV ingestion, case-level imputation, demographic mapping, filtering.
//! 2. [`discovery`]: directly-follows counting, heuristic dependency graph, place/transition net.
//! 3. [`conformance`]: token-based replay fitness per case.
//! 4. [`outcomes`]: duration, re-do classification, decision grouping.
//! 5. [`stats`]: Kruskal–Wallis / chi-square tests with effect sizes per acuity stratum.
//! 6. [`report`]: justice mapping, rendering, and the end-to-end pipeline.
//!
//! [`triage_sim`] generates synthetic logs with controllable bias for validation.

pub mod conformance;
pub mod discovery;
pub mod error;
pub mod eventlog;
pub mod outcomes;
pub mod report;
pub mod stats;
pub mod triage_sim;

pub use error::{Error, Result};
