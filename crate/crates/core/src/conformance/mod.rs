//! Token-replay conformance of cases against a [`ProcessNet`].
//!
//! Replay starts with one token on the source place. Each event fires its
//! transition, creating missing input tokens on the fly. After the last event
//! one token is consumed from the sink. Fitness is
//! `½(1 − m/c) + ½(1 − r/p)` over produced `p`, consumed `c`, missing `m` and
//! remaining `r` tokens.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::ProcessNet;
use crate::error::{Error, Result};
use crate::eventlog::{Case, EventLog};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub produced: u64,
    pub consumed: u64,
    pub missing: u64,
    pub remaining: u64,
    pub fitness: f64,
    /// Events whose activity has no transition; each counts one missing and
    /// one consumed token.
    pub unknown_activities: u64,
}

impl ReplayResult {
    pub fn from_counts(
        produced: u64,
        consumed: u64,
        missing: u64,
        remaining: u64,
        unknown: u64,
    ) -> Self {
        let fitness = 0.5 * (1.0 - missing as f64 / consumed as f64)
            + 0.5 * (1.0 - remaining as f64 / produced as f64);
        ReplayResult {
            produced,
            consumed,
            missing,
            remaining,
            fitness,
            unknown_activities: unknown,
        }
    }
}

/// Replays one case. Errors only on an empty case.
pub fn replay_case(net: &ProcessNet, case: &Case) -> Result<ReplayResult> {
    replay_activities(net, case.events.iter().map(|e| &*e.activity))
        .map_err(|_| Error::Validation(format!("case {} has no events to replay", case.case_id)))
}

/// Replays a bare activity sequence.
pub fn replay_activities<'a>(
    net: &ProcessNet,
    activities: impl IntoIterator<Item = &'a str>,
) -> Result<ReplayResult> {
    let mut marking = vec![0u64; net.places().len()];
    marking[net.source()] = 1;
    let (mut produced, mut consumed, mut missing, mut unknown) = (1u64, 0u64, 0u64, 0u64);
    let mut any = false;
    for activity in activities {
        any = true;
        let Some(t) = net.transition(activity) else {
            missing += 1;
            consumed += 1;
            unknown += 1;
            continue;
        };
        for &p in net.inputs(t) {
            if marking[p] == 0 {
                missing += 1;
            } else {
                marking[p] -= 1;
            }
            consumed += 1;
        }
        for &p in net.outputs(t) {
            marking[p] += 1;
            produced += 1;
        }
    }
    if !any {
        return Err(Error::Validation("cannot replay an empty trace".into()));
    }
    let sink = net.sink();
    if marking[sink] == 0 {
        missing += 1;
    } else {
        marking[sink] -= 1;
    }
    consumed += 1;
    let remaining = marking.iter().sum();
    Ok(ReplayResult::from_counts(
        produced, consumed, missing, remaining, unknown,
    ))
}

/// Replay results for every case, in log order.
pub fn replay_log(net: &ProcessNet, log: &EventLog) -> Result<Vec<ReplayResult>> {
    log.cases.par_iter().map(|c| replay_case(net, c)).collect()
}

/// Fitness per case id.
pub fn deviation_scores(net: &ProcessNet, log: &EventLog) -> Result<BTreeMap<String, f64>> {
    let results = replay_log(net, log)?;
    Ok(log
        .cases
        .iter()
        .zip(results)
        .map(|(c, r)| (c.case_id.to_string(), r.fitness))
        .collect())
}

#[derive(Serialize)]
struct ReplayRow<'a> {
    case_id: &'a str,
    produced: u64,
    consumed: u64,
    missing: u64,
    remaining: u64,
    fitness: f64,
}

/// CSV with columns `case_id,produced,consumed,missing,remaining,fitness`.
pub fn write_replay_csv<W: Write>(
    writer: W,
    log: &EventLog,
    results: &[ReplayResult],
) -> Result<()> {
    if results.len() != log.cases.len() {
        return Err(Error::Validation(format!(
            "{} replay results for {} cases",
            results.len(),
            log.cases.len()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    for (case, r) in log.cases.iter().zip(results) {
        w.serialize(ReplayRow {
            case_id: &case.case_id,
            produced: r.produced,
            consumed: r.consumed,
            missing: r.missing,
            remaining: r.remaining,
            fitness: r.fitness,
        })?;
    }
    w.flush().map_err(|e| Error::io("<replay csv>", e))?;
    Ok(())
}

pub fn write_replay_csv_path(path: &Path, log: &EventLog, results: &[ReplayResult]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_replay_csv(std::io::BufWriter::new(file), log, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::test_support::log_from_traces;
    use crate::discovery::{count_directly_follows, mine_dependency_graph, to_process_net};
    use proptest::prelude::*;

    fn net_from(traces: &[&[&str]]) -> ProcessNet {
        let df = count_directly_follows(&log_from_traces(traces));
        to_process_net(&mine_dependency_graph(&df, 0.8).unwrap()).unwrap()
    }

    fn chain() -> ProcessNet {
        net_from(&vec![&["A", "B", "C"][..]; 100])
    }

    #[test]
    fn conforming_trace_fits_perfectly() {
        let r = replay_activities(&chain(), ["A", "B", "C"]).unwrap();
        assert_eq!(
            (r.produced, r.consumed, r.missing, r.remaining),
            (4, 4, 0, 0)
        );
        assert_eq!(r.fitness, 1.0);
    }

    #[test]
    fn skipped_activity() {
        let r = replay_activities(&chain(), ["A", "C"]).unwrap();
        assert_eq!(
            (r.produced, r.consumed, r.missing, r.remaining),
            (3, 3, 1, 1)
        );
        assert!((r.fitness - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn starting_late_is_worse() {
        let r = replay_activities(&chain(), ["C"]).unwrap();
        assert!(r.fitness < 2.0 / 3.0);
    }

    #[test]
    fn unknown_activity_flagged() {
        let r = replay_activities(&chain(), ["A", "B", "Z", "C"]).unwrap();
        assert_eq!(r.unknown_activities, 1);
        assert_eq!((r.consumed, r.missing), (5, 1));
        assert!(r.fitness < 1.0);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(replay_activities(&chain(), std::iter::empty()).is_err());
    }

    #[test]
    fn self_loop_replays() {
        let mut traces: Vec<&[&str]> = vec![&["A", "B", "B", "C"]; 50];
        traces.extend(vec![&["A", "B", "C"][..]; 50]);
        let net = net_from(&traces);
        let r = replay_activities(&net, ["A", "B", "C"]).unwrap();
        assert!(r.fitness < 1.0 && r.fitness > 0.5);
    }

    #[test]
    fn csv_export() {
        let log = log_from_traces(&[&["A", "B", "C"], &["A", "C"]]);
        let net = chain();
        let results = replay_log(&net, &log).unwrap();
        let mut buf = Vec::new();
        write_replay_csv(&mut buf, &log, &results).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("case_id,produced,consumed,missing,remaining,fitness")
        );
        assert_eq!(lines.next(), Some("0,4,4,0,0,1.0"));
        assert!(lines.next().unwrap().starts_with("1,3,3,1,1,0.666"));
    }

    #[test]
    fn scores_keyed_by_case() {
        let log = log_from_traces(&[&["A", "B", "C"], &["A", "C"]]);
        let scores = deviation_scores(&chain(), &log).unwrap();
        assert_eq!(scores["0"], 1.0);
        assert!((scores["1"] - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn fitness_in_unit_interval(trace in prop::collection::vec(prop::sample::select(vec!["A", "B", "C", "Z"]), 1..20)) {
            let r = replay_activities(&chain(), trace.iter().copied()).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.fitness));
            prop_assert!(r.missing <= r.consumed && r.remaining <= r.produced);
        }

        #[test]
        fn extra_deviation_never_helps(cut in 0usize..3) {
            // Dropping one activity from a conforming trace cannot increase fitness.
            let full = ["A", "B", "C"];
            let partial: Vec<&str> = full.iter().enumerate().filter(|(i, _)| *i != cut).map(|(_, a)| *a).collect();
            let net = chain();
            let a = replay_activities(&net, full).unwrap().fitness;
            let b = replay_activities(&net, partial).unwrap().fitness;
            prop_assert!(b <= a);
        }
    }
}
