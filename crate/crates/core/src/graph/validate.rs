// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::SerializedGraph;
use crate::registry::Registry;

/// A broken graph invariant. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyId { index: usize },
    DuplicateNodeId { node: String },
    UnknownSpec { node: String, spec: String },
    UnknownInputSocket { node: String, input: String },
    UnknownSourceNode { node: String, input: String, source: String },
    UnknownOutputSocket { node: String, input: String, source: String, output: String },
    TypeMismatch { node: String, input: String, source: String, output: String },
    DuplicateEdge { node: String, input: String, source: String, output: String },
    Cycle { nodes: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId { index } => write!(f, "node #{index} has an empty id"),
            Violation::DuplicateNodeId { node } => write!(f, "duplicate node id `{node}`"),
            Violation::UnknownSpec { node, spec } => {
                write!(f, "node `{node}` uses unknown node spec `{spec}`")
            }
            Violation::UnknownInputSocket { node, input } => {
                write!(f, "node `{node}` has no input socket `{input}`")
            }
            Violation::UnknownSourceNode { node, input, source } => {
                write!(f, "edge into `{node}.{input}` comes from missing node `{source}`")
            }
            Violation::UnknownOutputSocket {
                node,
                input,
                source,
                output,
            } => write!(
                f,
                "edge into `{node}.{input}` reads missing output `{source}.{output}`"
            ),
            Violation::TypeMismatch {
                node,
                input,
                source,
                output,
            } => write!(
                f,
                "type mismatch: `{source}.{output}` cannot feed `{node}.{input}`"
            ),
            Violation::DuplicateEdge {
                node,
                input,
                source,
                output,
            } => write!(f, "duplicate edge `{source}.{output}` -> `{node}.{input}`"),
            Violation::Cycle { nodes } => write!(f, "cycle through {}", nodes.join(", ")),
        }
    }
}

/// Checks every structural, registry and typing invariant of a graph.
/// Returns an empty list iff the graph is valid.
pub fn validate(graph: &SerializedGraph, reg: &Registry) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut by_id = HashMap::new();
    for (index, node) in graph.nodes.iter().enumerate() {
        if node.id.is_empty() {
            violations.push(Violation::EmptyId { index });
        } else if by_id.insert(node.id.as_str(), node).is_some() {
            violations.push(Violation::DuplicateNodeId {
                node: node.id.clone(),
            });
        }
        if reg.get_spec(&node.node_spec_id).is_none() {
            violations.push(Violation::UnknownSpec {
                node: node.id.clone(),
                spec: node.node_spec_id.clone(),
            });
        }
    }

    for node in &graph.nodes {
        let spec = reg.get_spec(&node.node_spec_id);
        let mut seen = HashSet::new();
        for (input, edges) in &node.incoming_edges {
            let input_spec = match spec {
                Some(spec) => match spec.input(input) {
                    Some(s) => Some(s),
                    None => {
                        violations.push(Violation::UnknownInputSocket {
                            node: node.id.clone(),
                            input: input.clone(),
                        });
                        None
                    }
                },
                None => None,
            };
            for edge in edges {
                let ctx = |source: &str| (node.id.clone(), input.clone(), source.to_string(), edge.output_id.clone());
                if !seen.insert((input.as_str(), edge)) {
                    let (node, input, source, output) = ctx(&edge.source_node_id);
                    violations.push(Violation::DuplicateEdge {
                        node,
                        input,
                        source,
                        output,
                    });
                    continue;
                }
                let Some(source) = by_id.get(edge.source_node_id.as_str()) else {
                    violations.push(Violation::UnknownSourceNode {
                        node: node.id.clone(),
                        input: input.clone(),
                        source: edge.source_node_id.clone(),
                    });
                    continue;
                };
                let Some(source_spec) = reg.get_spec(&source.node_spec_id) else {
                    continue;
                };
                let Some(output_spec) = source_spec.output(&edge.output_id) else {
                    let (node, input, source, output) = ctx(&edge.source_node_id);
                    violations.push(Violation::UnknownOutputSocket {
                        node,
                        input,
                        source,
                        output,
                    });
                    continue;
                };
                if let Some(input_spec) = input_spec {
                    if !input_spec.accepts_any_of(output_spec) {
                        let (node, input, source, output) = ctx(&edge.source_node_id);
                        violations.push(Violation::TypeMismatch {
                            node,
                            input,
                            source,
                            output,
                        });
                    }
                }
            }
        }
    }

    if let Some(nodes) = cycle_nodes(graph) {
        violations.push(Violation::Cycle { nodes });
    }
    violations
}

/// Nodes that lie on (or between) cycles, in graph order, or `None` when the
/// graph is acyclic. Kahn's algorithm peels sources; peeling sinks from what
/// remains drops nodes that are merely downstream of a cycle.
fn cycle_nodes(graph: &SerializedGraph) -> Option<Vec<String>> {
    let ids: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let n = graph.nodes.len();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut pred: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for edge in graph.edges() {
        if let (Some(&s), Some(&t)) = (ids.get(edge.source.as_str()), ids.get(edge.target.as_str())) {
            succ[s].insert(t);
            pred[t].insert(s);
        }
    }

    let mut alive = vec![true; n];
    let peel = |alive: &mut Vec<bool>, incoming: &Vec<BTreeSet<usize>>, outgoing: &Vec<BTreeSet<usize>>| {
        let mut degree: Vec<usize> = incoming.iter().map(BTreeSet::len).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&i| alive[i] && degree[i] == 0).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for &w in &outgoing[v] {
                if alive[w] {
                    degree[w] -= 1;
                    if degree[w] == 0 {
                        stack.push(w);
                    }
                }
            }
        }
    };
    peel(&mut alive, &pred, &succ);
    if !alive.iter().any(|&a| a) {
        return None;
    }
    // Degrees in the second pass must count live neighbours only.
    let live_succ: Vec<BTreeSet<usize>> = succ
        .iter()
        .map(|s| s.iter().copied().filter(|&w| alive[w]).collect())
        .collect();
    let live_pred: Vec<BTreeSet<usize>> = pred
        .iter()
        .map(|s| s.iter().copied().filter(|&w| alive[w]).collect())
        .collect();
    peel(&mut alive, &live_succ, &live_pred);
    Some(
        (0..n)
            .filter(|&i| alive[i])
            .map(|i| graph.nodes[i].id.clone())
            .collect(),
    )
}
