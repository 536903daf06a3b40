//! Heuristic-miner style discovery of a reference model.
//!
//! Directly-follows counts feed the dependency measure
//! `(|a>b| − |b>a|) / (|a>b| + |b>a| + 1)`; edges at or above the threshold
//! are kept, then every activity is connected to at least one predecessor and
//! successor. [`to_process_net`] turns the graph into a place/transition net
//! with one place per dependency edge.

mod net;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use net::{to_process_net, ArcDirection, NetArc, ProcessNet};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;

pub const DEFAULT_DEPENDENCY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectlyFollows {
    /// Occurrences of each activity.
    pub activities: BTreeMap<String, u64>,
    /// `|a>b|`: how often `b` immediately follows `a` within a case.
    pub counts: BTreeMap<(String, String), u64>,
    pub starts: BTreeMap<String, u64>,
    pub ends: BTreeMap<String, u64>,
}

impl DirectlyFollows {
    pub fn count(&self, a: &str, b: &str) -> u64 {
        // BTreeMap<(String, String)> cannot be queried by (&str, &str) directly.
        self.counts
            .range((a.to_string(), b.to_string())..)
            .next()
            .filter(|((x, y), _)| x == a && y == b)
            .map_or(0, |(_, &n)| n)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Adds another table's counts into this one.
    pub fn merge(&mut self, other: &DirectlyFollows) {
        fn add<K: Ord + Clone>(into: &mut BTreeMap<K, u64>, from: &BTreeMap<K, u64>) {
            for (k, v) in from {
                *into.entry(k.clone()).or_insert(0) += v;
            }
        }
        add(&mut self.activities, &other.activities);
        add(&mut self.counts, &other.counts);
        add(&mut self.starts, &other.starts);
        add(&mut self.ends, &other.ends);
    }
}

#[derive(Default)]
struct LocalCounts<'a> {
    activities: HashMap<&'a str, u64>,
    pairs: HashMap<(&'a str, &'a str), u64>,
    starts: HashMap<&'a str, u64>,
    ends: HashMap<&'a str, u64>,
}

impl<'a> LocalCounts<'a> {
    fn merge(mut self, other: LocalCounts<'a>) -> Self {
        fn add<K: Eq + std::hash::Hash>(into: &mut HashMap<K, u64>, from: HashMap<K, u64>) {
            for (k, v) in from {
                *into.entry(k).or_insert(0) += v;
            }
        }
        add(&mut self.activities, other.activities);
        add(&mut self.pairs, other.pairs);
        add(&mut self.starts, other.starts);
        add(&mut self.ends, other.ends);
        self
    }
}

/// Tallies adjacent activity pairs and start/end activities over all cases.
pub fn count_directly_follows(log: &EventLog) -> DirectlyFollows {
    let local = log
        .cases
        .par_iter()
        .fold(LocalCounts::default, |mut acc, case| {
            for e in &case.events {
                *acc.activities.entry(&e.activity).or_insert(0) += 1;
            }
            for w in case.events.windows(2) {
                *acc.pairs
                    .entry((&w[0].activity, &w[1].activity))
                    .or_insert(0) += 1;
            }
            if let (Some(first), Some(last)) = (case.events.first(), case.events.last()) {
                *acc.starts.entry(&first.activity).or_insert(0) += 1;
                *acc.ends.entry(&last.activity).or_insert(0) += 1;
            }
            acc
        })
        .reduce(LocalCounts::default, LocalCounts::merge);

    let owned = |m: HashMap<&str, u64>| m.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    DirectlyFollows {
        activities: owned(local.activities),
        counts: local
            .pairs
            .into_iter()
            .map(|((a, b), v)| ((a.to_string(), b.to_string()), v))
            .collect(),
        starts: owned(local.starts),
        ends: owned(local.ends),
    }
}

/// Dependency `a ⇒ b`. For `a == b` this is the self-loop form `|a>a| / (|a>a| + 1)`.
pub fn dependency_measure(df: &DirectlyFollows, a: &str, b: &str) -> f64 {
    let ab = df.count(a, b) as f64;
    if a == b {
        return ab / (ab + 1.0);
    }
    let ba = df.count(b, a) as f64;
    (ab - ba) / (ab + ba + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub dependency: f64,
    /// Added by connectivity repair rather than by passing the threshold.
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), DependencyEdge>,
    pub threshold: f64,
    pub starts: BTreeSet<String>,
    pub ends: BTreeSet<String>,
}

impl DependencyGraph {
    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.contains_key(&(a.to_string(), b.to_string()))
    }
}

/// Keeps edges with dependency ≥ `threshold`, then repairs connectivity: any
/// activity that is not a start activity and lacks a predecessor gets its
/// best-scoring incoming edge, and symmetrically for successors of non-end
/// activities. Ties go to the lexicographically first candidate.
pub fn mine_dependency_graph(df: &DirectlyFollows, threshold: f64) -> Result<DependencyGraph> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config(
            "thresholds.tau",
            format!("dependency threshold {threshold} outside [0, 1]"),
        ));
    }
    let nodes: BTreeSet<String> = df.activities.keys().cloned().collect();
    let mut edges = BTreeMap::new();
    for (a, b) in df.counts.keys() {
        let dependency = dependency_measure(df, a, b);
        if dependency >= threshold {
            edges.insert(
                (a.clone(), b.clone()),
                DependencyEdge {
                    dependency,
                    repaired: false,
                },
            );
        }
    }

    let best = |pairs: &mut dyn Iterator<Item = (&String, &String)>| {
        pairs
            .map(|(a, b)| ((a.clone(), b.clone()), dependency_measure(df, a, b)))
            .fold(None::<((String, String), f64)>, |best, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            })
    };

    let starts: BTreeSet<String> = df.starts.keys().cloned().collect();
    let ends: BTreeSet<String> = df.ends.keys().cloned().collect();
    for node in &nodes {
        let has_in = edges.keys().any(|(a, b)| b == node && a != node);
        if !starts.contains(node) && !has_in {
            let mut candidates = df
                .counts
                .keys()
                .filter(|(a, b)| b == node && a != node)
                .map(|(a, b)| (a, b));
            if let Some((key, dependency)) = best(&mut candidates) {
                edges.entry(key).or_insert(DependencyEdge {
                    dependency,
                    repaired: true,
                });
            }
        }
        let has_out = edges.keys().any(|(a, b)| a == node && b != node);
        if !ends.contains(node) && !has_out {
            let mut candidates = df
                .counts
                .keys()
                .filter(|(a, b)| a == node && b != node)
                .map(|(a, b)| (a, b));
            if let Some((key, dependency)) = best(&mut candidates) {
                edges.entry(key).or_insert(DependencyEdge {
                    dependency,
                    repaired: true,
                });
            }
        }
    }

    Ok(DependencyGraph {
        nodes,
        edges,
        threshold,
        starts,
        ends,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::log_from_traces;
    use super::*;

    fn df_of(traces: &[&[&str]]) -> DirectlyFollows {
        count_directly_follows(&log_from_traces(traces))
    }

    fn pairs(g: &DependencyGraph) -> Vec<(&str, &str)> {
        g.edges
            .keys()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect()
    }

    #[test]
    fn counts_single_trace() {
        let df = df_of(&[&["A", "B", "C"]]);
        assert_eq!(df.count("A", "B"), 1);
        assert_eq!(df.count("B", "C"), 1);
        assert_eq!(df.counts.len(), 2);
        assert_eq!(df.starts.get("A"), Some(&1));
        assert_eq!(df.ends.get("C"), Some(&1));
    }

    #[test]
    fn counts_self_loop_and_additivity() {
        assert_eq!(df_of(&[&["A", "A"]]).count("A", "A"), 1);
        assert_eq!(df_of(&[&["A", "B"], &["A", "B"]]).count("A", "B"), 2);
    }

    #[test]
    fn total_is_events_minus_one_per_case() {
        let df = df_of(&[&["A", "B", "C"], &["A"], &["B", "B"]]);
        assert_eq!(df.total(), 3);
    }

    #[test]
    fn dependency_values() {
        let mut df = DirectlyFollows::default();
        assert_eq!(dependency_measure(&df, "a", "b"), 0.0);
        df.counts.insert(("a".into(), "b".into()), 4);
        assert!((dependency_measure(&df, "a", "b") - 0.8).abs() < 1e-15);
        assert!((dependency_measure(&df, "b", "a") + 0.8).abs() < 1e-15);
        df.counts.insert(("a".into(), "a".into()), 9);
        assert!((dependency_measure(&df, "a", "a") - 0.9).abs() < 1e-15);
    }

    #[test]
    fn mines_chain() {
        let traces: Vec<&[&str]> = vec![&["A", "B", "C"]; 100];
        let g = mine_dependency_graph(&df_of(&traces), 0.8).unwrap();
        assert_eq!(pairs(&g), [("A", "B"), ("B", "C")]);
        assert!(g
            .edges
            .values()
            .all(|e| !e.repaired && (e.dependency - 100.0 / 101.0).abs() < 1e-12));
    }

    #[test]
    fn repair_at_full_threshold() {
        let traces: Vec<&[&str]> = vec![&["A", "B", "C"]; 100];
        let g = mine_dependency_graph(&df_of(&traces), 1.0).unwrap();
        assert_eq!(pairs(&g), [("A", "B"), ("B", "C")]);
        assert!(g.edges.values().all(|e| e.repaired));
    }

    #[test]
    fn noise_pair_dropped() {
        let mut traces: Vec<&[&str]> = vec![&["A", "B", "C", "D"]; 50];
        traces.push(&["A", "X", "Y", "D"]);
        traces.push(&["A", "Y", "X", "D"]);
        let df = df_of(&traces);
        assert_eq!(dependency_measure(&df, "X", "Y"), 0.0);
        let g = mine_dependency_graph(&df, 0.8).unwrap();
        assert!(!g.has_edge("X", "Y"));
        assert!(!g.has_edge("Y", "X"));
    }

    #[test]
    fn threshold_validated() {
        assert!(mine_dependency_graph(&DirectlyFollows::default(), 1.5).is_err());
    }

    #[test]
    fn merge_matches_joint_count() {
        let a = df_of(&[&["A", "B"], &["B", "C"]]);
        let b = df_of(&[&["A", "B", "B"]]);
        let mut merged = a.clone();
        merged.merge(&b);
        let joint = df_of(&[&["A", "B"], &["B", "C"], &["A", "B", "B"]]);
        assert_eq!(merged, joint);
    }

    proptest::proptest! {
        #[test]
        fn edge_invariants(
            traces in proptest::collection::vec(
                proptest::collection::vec(proptest::sample::select(&["A", "B", "C", "D"][..]), 1..6),
                1..12,
            ),
            tau in 0.0f64..=1.0,
        ) {
            let refs: Vec<Vec<&str>> = traces.iter().map(|t| t.to_vec()).collect();
            let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
            let df = df_of(&slices);
            let g = mine_dependency_graph(&df, tau).unwrap();
            for ((a, b), e) in &g.edges {
                proptest::prop_assert!(e.dependency > -1.0 && e.dependency < 1.0);
                proptest::prop_assert!(e.repaired || e.dependency >= tau);
                proptest::prop_assert!(df.count(a, b) > 0);
            }
            for n in &g.nodes {
                let has_in = g.edges.keys().any(|(a, b)| b == n && a != n);
                let has_out = g.edges.keys().any(|(a, b)| a == n && a != b);
                let can_in = g.nodes.iter().any(|m| m != n && df.count(m, n) > 0);
                let can_out = g.nodes.iter().any(|m| m != n && df.count(n, m) > 0);
                proptest::prop_assert!(g.starts.contains(n) || has_in || !can_in);
                proptest::prop_assert!(g.ends.contains(n) || has_out || !can_out);
            }
        }
    }
}
