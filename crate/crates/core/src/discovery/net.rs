use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::DependencyGraph;
use crate::error::{Error, Result};

pub const SOURCE_PLACE: &str = "source";
pub const SINK_PLACE: &str = "sink";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcDirection {
    /// place → transition
    Input,
    /// transition → place
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetArc {
    pub place: String,
    pub transition: String,
    pub direction: ArcDirection,
}

/// On-disk form of a net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDocument {
    transitions: Vec<String>,
    places: Vec<String>,
    arcs: Vec<NetArc>,
    source: String,
    sink: String,
}

/// Place/transition net with one visible transition per activity.
///
/// Transitions fire under AND semantics: every input place must hold a
/// token, and firing puts one token in every output place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetDocument", into = "NetDocument")]
pub struct ProcessNet {
    transitions: Vec<String>,
    places: Vec<String>,
    arcs: Vec<NetArc>,
    source: usize,
    sink: usize,
    transition_index: HashMap<String, usize>,
    inputs: Vec<Vec<usize>>,
    outputs: Vec<Vec<usize>>,
}

impl ProcessNet {
    /// Builds and checks a net: names unique, arcs resolve, source has no
    /// incoming arc, sink no outgoing arc, every transition reachable from source.
    pub fn new(
        transitions: Vec<String>,
        places: Vec<String>,
        arcs: Vec<NetArc>,
        source: &str,
        sink: &str,
    ) -> Result<Self> {
        let place_index = unique_index(&places, "place")?;
        let transition_index = unique_index(&transitions, "transition")?;
        let lookup = |map: &HashMap<String, usize>, name: &str, what: &str| {
            map.get(name)
                .copied()
                .ok_or_else(|| Error::Structural(format!("arc references unknown {what} {name:?}")))
        };
        let source_idx = lookup(&place_index, source, "place")?;
        let sink_idx = lookup(&place_index, sink, "place")?;
        if source_idx == sink_idx {
            return Err(Error::Structural("source and sink must differ".into()));
        }

        let mut inputs = vec![Vec::new(); transitions.len()];
        let mut outputs = vec![Vec::new(); transitions.len()];
        for arc in &arcs {
            let p = lookup(&place_index, &arc.place, "place")?;
            let t = lookup(&transition_index, &arc.transition, "transition")?;
            match arc.direction {
                ArcDirection::Input if p == sink_idx => {
                    return Err(Error::Structural(format!(
                        "sink place feeds transition {:?}",
                        arc.transition
                    )))
                }
                ArcDirection::Output if p == source_idx => {
                    return Err(Error::Structural(format!(
                        "transition {:?} feeds the source place",
                        arc.transition
                    )))
                }
                ArcDirection::Input => inputs[t].push(p),
                ArcDirection::Output => outputs[t].push(p),
            }
        }

        let net = ProcessNet {
            transitions,
            places,
            arcs,
            source: source_idx,
            sink: sink_idx,
            transition_index,
            inputs,
            outputs,
        };
        net.check_reachability()?;
        Ok(net)
    }

    fn check_reachability(&self) -> Result<()> {
        // Structural reachability over the arc graph, ignoring token counts.
        let mut consumers = vec![Vec::new(); self.places.len()];
        for (t, ins) in self.inputs.iter().enumerate() {
            for &p in ins {
                consumers[p].push(t);
            }
        }
        let mut seen_place = vec![false; self.places.len()];
        let mut seen_transition = vec![false; self.transitions.len()];
        let mut queue = VecDeque::from([self.source]);
        seen_place[self.source] = true;
        while let Some(p) = queue.pop_front() {
            for &t in &consumers[p] {
                if !seen_transition[t] {
                    seen_transition[t] = true;
                    for &q in &self.outputs[t] {
                        if !seen_place[q] {
                            seen_place[q] = true;
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        let unreachable: Vec<&str> = self
            .transitions
            .iter()
            .zip(&seen_transition)
            .filter(|(_, &seen)| !seen)
            .map(|(t, _)| t.as_str())
            .collect();
        if !unreachable.is_empty() {
            return Err(Error::Structural(format!(
                "transitions not reachable from source: {}",
                unreachable.join(", ")
            )));
        }
        if !seen_place[self.sink] {
            return Err(Error::Structural("sink not reachable from source".into()));
        }
        Ok(())
    }

    pub fn transitions(&self) -> &[String] {
        &self.transitions
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn arcs(&self) -> &[NetArc] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn transition(&self, activity: &str) -> Option<usize> {
        self.transition_index.get(activity).copied()
    }

    pub fn inputs(&self, transition: usize) -> &[usize] {
        &self.inputs[transition]
    }

    pub fn outputs(&self, transition: usize) -> &[usize] {
        &self.outputs[transition]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Graphviz rendering: places as circles, transitions as boxes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph net {\n  rankdir=LR;\n");
        for (i, p) in self.places.iter().enumerate() {
            let label = if i == self.source || i == self.sink {
                p.as_str()
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  \"p:{}\" [shape=circle, label=\"{}\", tooltip=\"{}\"];",
                escape(p),
                escape(label),
                escape(p)
            );
        }
        for t in &self.transitions {
            let _ = writeln!(
                out,
                "  \"t:{}\" [shape=box, label=\"{}\"];",
                escape(t),
                escape(t)
            );
        }
        for arc in &self.arcs {
            let (from, to) = match arc.direction {
                ArcDirection::Input => {
                    (format!("p:{}", arc.place), format!("t:{}", arc.transition))
                }
                ArcDirection::Output => {
                    (format!("t:{}", arc.transition), format!("p:{}", arc.place))
                }
            };
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", escape(&from), escape(&to));
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn unique_index(names: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(Error::Structural(format!("duplicate {what} {name:?}")));
        }
    }
    Ok(index)
}

impl TryFrom<NetDocument> for ProcessNet {
    type Error = Error;

    fn try_from(doc: NetDocument) -> Result<Self> {
        ProcessNet::new(
            doc.transitions,
            doc.places,
            doc.arcs,
            &doc.source,
            &doc.sink,
        )
    }
}

impl From<ProcessNet> for NetDocument {
    fn from(net: ProcessNet) -> Self {
        NetDocument {
            source: net.places[net.source].clone(),
            sink: net.places[net.sink].clone(),
            transitions: net.transitions,
            places: net.places,
            arcs: net.arcs,
        }
    }
}

fn edge_place(a: &str, b: &str) -> String {
    format!("p({a},{b})")
}

/// One place per dependency edge `(a, b)` between transitions `a` and `b`,
/// plus a source place feeding every start activity and a sink fed by every
/// end activity.
pub fn to_process_net(graph: &DependencyGraph) -> Result<ProcessNet> {
    if graph.nodes.is_empty() {
        return Err(Error::Structural(
            "dependency graph has no activities".into(),
        ));
    }
    if graph.starts.is_empty() || graph.ends.is_empty() {
        return Err(Error::Structural(
            "dependency graph has no start or end activity".into(),
        ));
    }
    let transitions: Vec<String> = graph.nodes.iter().cloned().collect();
    let mut places = vec![SOURCE_PLACE.to_string()];
    let mut arcs = Vec::new();
    for start in &graph.starts {
        arcs.push(NetArc {
            place: SOURCE_PLACE.into(),
            transition: start.clone(),
            direction: ArcDirection::Input,
        });
    }
    for (a, b) in graph.edges.keys() {
        let place = edge_place(a, b);
        arcs.push(NetArc {
            place: place.clone(),
            transition: a.clone(),
            direction: ArcDirection::Output,
        });
        arcs.push(NetArc {
            place: place.clone(),
            transition: b.clone(),
            direction: ArcDirection::Input,
        });
        places.push(place);
    }
    for end in &graph.ends {
        arcs.push(NetArc {
            place: SINK_PLACE.into(),
            transition: end.clone(),
            direction: ArcDirection::Output,
        });
    }
    places.push(SINK_PLACE.to_string());
    ProcessNet::new(transitions, places, arcs, SOURCE_PLACE, SINK_PLACE)
}
